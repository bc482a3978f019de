//! Set-cover instances mapped to trust and color allocation problems, with
//! both sides solved exactly.

use resest::design::SetCoverInstance;
use resest::{csra_bruteforce, reduce_3dsc_to_csra, reduce_sc_to_tsra, tsra_bruteforce};

fn main() -> resest::Result<()> {
    let sc = SetCoverInstance::parse("p 4\nF 1 2\nF 3\nF 3 4\nF 1 4\nt 2\n", "inline")?;
    let tsra = reduce_sc_to_tsra(&sc)?;
    let (yes, witness) = tsra_bruteforce(&tsra)?;
    println!(
        "set cover with t=2: {} | trusted allocation: {yes} via {witness:?}",
        sc.set_cover_bruteforce()?
    );

    for text in [
        "p 2\nF 1\nF 2\nF 1 2\nF 1\nF 2\nF 1 2\n",
        "p 2\nF 1\nF 2\nF 1 2\n",
        "p 1\nF 1\nF 1\n",
    ] {
        let dsc = SetCoverInstance::parse(text, "inline")?;
        let csra = reduce_3dsc_to_csra(&dsc)?;
        let (yes, coloring) = csra_bruteforce(&csra, 3)?;
        println!(
            "{} subsets: three disjoint covers {} | 3-coloring {yes} {coloring:?}{}",
            dsc.subsets.len(),
            dsc.three_disjoint_covers_bruteforce(),
            if csra.trivial_no { " (trivial no)" } else { "" }
        );
    }

    let dir = std::env::temp_dir().join("resest-reduction");
    tsra.write_to_dir(&dir)?;
    println!("instance files written to {}", dir.display());
    Ok(())
}
