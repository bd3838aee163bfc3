//! Command-line entry point. Placeholder while the library comes up.

pub fn main() -> i32 {
    eprintln!("not yet wired");
    2
}
