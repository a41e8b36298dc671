#![no_main]

use formheat::geometry::Mesh;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // accepted meshes must survive a write/read cycle unchanged
    if let Ok(mesh) = Mesh::parse_str(text) {
        let again = Mesh::parse_str(&mesh.to_text()).expect("written mesh parses");
        assert_eq!(again, mesh);
        let _ = mesh.stats();
    }
});
