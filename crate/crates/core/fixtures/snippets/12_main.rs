fn main() {
    let v: Vec<u32> = (1..=10).collect();
    let evens: Vec<_> = v.iter().filter(|x| *x % 2 == 0).collect();
    println!("{:?}", evens);
}
