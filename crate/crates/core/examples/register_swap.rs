// $ cargo run --example register_swap
use opfreq::asm::{parse_program, serialize_program};
use opfreq::mutation::{random_permutation, swap_registers, RegisterPermutation};

const V1: &str = include_str!("../tests/fixtures/regswap_v1.oasm");

fn main() {
    let program = parse_program(V1, "regswap").unwrap();
    let perm: RegisterPermutation = "edx=eax,edi=ebx,esi=edx,eax=edi,ebx=esi".parse().unwrap();
    println!("mapping {perm}\n");
    print!("{}", serialize_program(&swap_registers(&program, &perm).unwrap()));

    let random = random_permutation(&program, 7);
    println!("\nseed 7 draws {random}\n");
    print!("{}", serialize_program(&swap_registers(&program, &random).unwrap()));
}
