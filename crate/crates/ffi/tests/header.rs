use std::path::Path;
use std::process::Command;

/// The generated header must compile as C and as C++ when a compiler is around.
#[test]
fn header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/maslov.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) =
            Command::new(compiler).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&header).output()
        else {
            eprintln!("{compiler} not found, skipping");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
