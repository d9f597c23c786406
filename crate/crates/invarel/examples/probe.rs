use std::time::Instant;
fn main() {
    for f in ["se2-local","se2-global","se2-tresse","moebius2d-local","moebius2d-global","psl3r-local","psl3r-global","se3-local","se3-global","se3-minkowski","conf3","se4-local","se4-minkowski"] {
        let path = format!("crates/invarel/assets/geometries/{f}.json");
        let s = std::fs::read_to_string(&path).unwrap();
        let t = Instant::now();
        match invarel::geometry::load_str(&s) {
            Ok(_) => println!("{f}: ok in {:?}", t.elapsed()),
            Err(e) => println!("{f}: ERR {e}"),
        }
    }
}
