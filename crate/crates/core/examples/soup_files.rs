//! Write a soup in the text and binary formats and read both back.

use loopsoup::soup::sample_soup;
use loopsoup::soup_io::{read_binary, read_text, to_binary, to_text};
use loopsoup::{Domain, SoupConfig};

fn main() -> loopsoup::Result<()> {
    let cfg = SoupConfig::new(Domain::rectangle(2.0, 1.0), 0.8, 0.01, 1.0, 2e-3, 42);
    let soup = sample_soup(&cfg)?;

    let text = to_text(&soup);
    let bin = to_binary(&soup);
    println!("{} loops: {} bytes as text, {} bytes as binary", soup.len(), text.len(), bin.len());
    println!("{}", text.lines().take(10).collect::<Vec<_>>().join("\n"));

    let from_text = read_text(text.as_bytes())?;
    let from_bin = read_binary(bin.as_slice())?;
    assert_eq!(from_text, soup);
    assert_eq!(from_bin, soup);
    println!("both formats round-trip exactly");
    Ok(())
}
