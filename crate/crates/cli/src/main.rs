fn main() { println!("{}", truckway::placeholder()); }
