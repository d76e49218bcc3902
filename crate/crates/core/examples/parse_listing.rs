// $ cargo run --example parse_listing
use opfreq::asm::{effects, parse_program, serialize_program};

const LISTING: &str = "\
; a frame setup and a tiny loop
proc setup
  push ebp
  mov ebp, esp
  mov esi, dword ptr [ebp + 08]
top:
  add eax, [esi+ecx*4]
  dec ecx
  jnz top
  ret
endp

proc empty
endp
";

fn main() {
    let program = parse_program(LISTING, "setup").expect("listing parses");
    for sub in program.subroutines() {
        println!("{}: {} instructions, labels {:?}", sub.name(), sub.body().len(), sub.labels());
    }
    println!("empty subroutines: {:?}", program.empty_subroutines());

    let add = &program.subroutines()[0].body()[3];
    let fx = effects(add);
    println!("`{add}` reads {:?}, writes {:?}, writes flags: {}", fx.reads, fx.writes, fx.writes_flags);

    print!("\ncanonical form:\n{}", serialize_program(&program));

    let err = parse_program("proc f\n  mov eax, 0F\nendp\n", "bad").unwrap_err();
    println!("\nrejected: {err}");
}
