//! Gate counts of every precompiled netlist; with a directory argument, also
//! writes each netlist as text.
//!
//! cargo run --release --example netlist_export -- /tmp/netlists

use secinfer::gc::{build_netlist, FixedPointSpec, NetlistKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from);
    if let Some(d) = &dir {
        std::fs::create_dir_all(d)?;
    }
    let kinds = [
        NetlistKind::Add,
        NetlistKind::Sub,
        NetlistKind::Mul,
        NetlistKind::DivScale,
        NetlistKind::Relu,
        NetlistKind::Poly2Sigmoid,
        NetlistKind::MatVec { rows: 4, cols: 3 },
    ];
    for width in [32, 64] {
        let spec = FixedPointSpec::new(width, 1000)?;
        println!("width {width}");
        println!(
            "  {:<16} {:>8} {:>8} {:>7} {:>11}",
            "netlist", "AND", "XOR", "in", "table B"
        );
        for kind in kinds {
            let c = build_netlist(kind, spec)?;
            let s = c.stats();
            println!(
                "  {:<16} {:>8} {:>8} {:>7} {:>11}",
                kind.to_string(),
                s.and_count,
                s.xor_count,
                s.input_bits,
                s.and_count * 32
            );
            if let Some(d) = &dir {
                let name = kind
                    .to_string()
                    .to_lowercase()
                    .replace(['(', ')', ','], "_");
                std::fs::write(d.join(format!("{name}w{width}.txt")), c.to_text())?;
            }
        }
    }
    Ok(())
}
