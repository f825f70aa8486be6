use serde_json::Value;
use spiral_core::filterbank::{
    build_first_order_bank, build_spiral_banks, design_mother_wavelet, LowpassWindow, SpiralBankConfig,
};

fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/filterbank.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn written_params_match_the_schema() {
    let schema = schema();
    let required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let props = schema["properties"].as_object().unwrap();
    let kinds = props["kind"]["enum"].as_array().unwrap();
    let signs = props["signs"]["items"]["enum"].as_array().unwrap();

    let mother = design_mother_wavelet(12.0).unwrap();
    let first = build_first_order_bank(&mother, 12, 8, 22050.0, 1 << 16).unwrap();
    let spiral = build_spiral_banks(&SpiralBankConfig {
        alpha_range: (1.0, 32.0),
        beta_range: (0.5, 4.0),
        gamma_range: (0.25, 0.5),
        q2: 1,
        bins_per_octave: 12,
        octaves: 8,
    })
    .unwrap();
    let w = LowpassWindow::new(0.5).unwrap();
    for bank in [&first, &spiral.alpha, &spiral.beta, &spiral.gamma] {
        let doc = serde_json::to_value(bank.params(Some(&w))).unwrap();
        let obj = doc.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        let mut want = required.clone();
        want.sort_unstable();
        assert_eq!(keys, want);
        assert!(kinds.contains(&doc["kind"]), "{}", doc["kind"]);
        for s in doc["signs"].as_array().unwrap() {
            assert!(signs.contains(s), "{s}");
        }
        assert_eq!(doc["centers"].as_array().unwrap().len(), doc["signs"].as_array().unwrap().len());
    }
}
