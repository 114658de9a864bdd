use std::fmt::Write;

use flavors::problems::{all, Reference};

use crate::config::{lookup, STABILITY_SCAN};
use crate::error::CliResult;
use crate::output::num;

/// Six significant digits, for the table.
fn short(x: f64) -> String {
    num(format!("{x:.5e}").parse().unwrap_or(x))
}

pub fn list_text() -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:<18} {:<13} {:>11} {:>7} {:>9}  description",
        "name", "model", "method", "tau", "delta", "horizon"
    );
    for b in all() {
        let _ = writeln!(
            s,
            "{:<24} {:<18} {:<13} {:>11} {:>7} {:>9}  {}",
            b.name,
            b.model.family(),
            b.default_method.name(),
            short(b.default_schedule.tau()),
            short(b.default_schedule.delta()),
            short(b.horizon),
            b.anchor
        );
    }
    let _ = writeln!(
        s,
        "{STABILITY_SCAN:<24} {:<18} {:<13} {:>11} {:>7} {:>9}  Transfer-matrix stability over a (delta, tau/eps) grid",
        "linear", "nonintrusive", "-", "-", "-"
    );
    s
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", ")
}

pub fn describe_text(name: &str) -> CliResult<String> {
    if name == STABILITY_SCAN {
        return Ok(format!(
            "{STABILITY_SCAN}\n  Spectral-radius verdicts of the linear problem's transfer matrix.\n  \
             flags: --kind nonintrusive|reversible|artificial, --omega (default 1000)\n  \
             grid: delta = 0.02..4 step 0.02, tau/eps = 1e-2..1e3 (51 log-spaced values)\n  \
             output: stability_grid.csv\n"
        ));
    }
    let b = lookup(name, None)?;
    let mut s = String::new();
    let _ = writeln!(s, "{}", b.name);
    let _ = writeln!(s, "  {}", b.anchor);
    let _ = writeln!(s, "  model:          {} (dim {}, epsilon {})", b.model.family(), b.dim(), num(b.epsilon()));
    let params: Vec<String> = b.params.iter().map(|(k, v)| format!("{k} = {}", num(*v))).collect();
    let _ = writeln!(s, "  parameters:     {}", params.join(", "));
    let _ = writeln!(s, "  default method: {}", b.default_method.name());
    let _ = writeln!(
        s,
        "  schedule:       tau = {}, delta = {}",
        num(b.default_schedule.tau()),
        num(b.default_schedule.delta())
    );
    let _ = writeln!(s, "  horizon:        {}", num(b.horizon));
    if b.model.is_stochastic() {
        let _ = writeln!(s, "  ensemble:       {}", b.ensemble_size);
    }
    let _ = writeln!(s, "  sample stride:  {}", b.default_stride);
    let _ = writeln!(s, "  state:          [{}]", b.state_labels.join(", "));
    let _ = writeln!(s, "  initial state:  [{}]", join(&b.initial_state));
    let names = |v: &[flavors::system::SlowObservable]| v.iter().map(|o| o.name.clone()).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "  slow:           {}", names(&b.slow_observables));
    if !b.fast_observables.is_empty() {
        let _ = writeln!(s, "  fast:           {}", names(&b.fast_observables));
    }
    let reference = match &b.reference {
        Reference::Fine { method, h } => format!("{} with h = {}", method.name(), num(*h)),
        Reference::ClosedForm(_) => "closed form".into(),
    };
    let _ = writeln!(s, "  reference:      {reference}");
    let methods: Vec<&str> = b.supported_methods().iter().map(|m| m.name()).collect();
    let _ = writeln!(s, "  methods:        {}", methods.join(", "));
    Ok(s)
}
