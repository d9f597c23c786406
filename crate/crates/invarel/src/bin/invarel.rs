fn main() {
    println!("invarel: placeholder");
}
