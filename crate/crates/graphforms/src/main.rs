fn main() {
    println!("graphforms");
}
