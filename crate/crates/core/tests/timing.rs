//! Wall-clock check that recurrent generation costs the same per token at
//! any sequence length: 2L tokens take about twice as long as L tokens.

use std::process::ExitCode;

use s4::bench::time_repeats;
use s4::hippo::HippoFamily;
use s4::layer::{layer_init, LayerStepper, S4LayerParams};
use s4::random::normal_vec;
use s4::Result;

fn generate(p: &S4LayerParams, u: &[f64]) -> Result<f64> {
    let h = p.h();
    let mut st = LayerStepper::new(p)?;
    let mut y = vec![0.0; h];
    let mut acc = 0.0;
    for x in u.chunks_exact(h) {
        st.step(x, &mut y)?;
        acc += y[0];
    }
    Ok(acc)
}

fn main() -> ExitCode {
    let h = 4;
    let p = layer_init(h, 64, HippoFamily::LegS, 0).expect("layer init");
    let mut ok = true;
    for l in [2048, 8192] {
        let short = normal_vec(l * h, 1);
        let long = normal_vec(2 * l * h, 1);
        let (t1, _) = time_repeats(9, || generate(&p, &short)).expect("generate");
        let (t2, _) = time_repeats(9, || generate(&p, &long)).expect("generate");
        let ratio = t2 / t1;
        let pass = (1.4..=2.6).contains(&ratio);
        ok &= pass;
        println!(
            "per-step cost L={l} -> {}: {t1:.3} ms -> {t2:.3} ms, ratio {ratio:.2} (want 2 +/- 30%) {}",
            2 * l,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
