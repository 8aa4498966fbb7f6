//! Writes the synthetic North Sea case (network, profiles, curves) into a
//! directory, `data/north_sea` by default.

use zonal_opf::desk::{write_north_sea, DESK_RANGE, DESK_SEED};

fn main() -> zonal_opf::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/north_sea".into());
    let files = write_north_sea(&dir, DESK_RANGE, DESK_SEED)?;
    for f in [files.network, files.profiles, files.curves] {
        println!("wrote {}", f.display());
    }
    Ok(())
}
