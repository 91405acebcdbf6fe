use std::fmt::Write;

use sphreg::estimation::{Dataset, ErrorModel, FitResult};
use sphreg::io::format_number;

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// Human-readable summary of a fit.
pub fn fit_report(fit: &FitResult, data: &Dataset) -> String {
    let d = fit.dims();
    let mut s = String::new();
    let model = match fit.model {
        ErrorModel::Vmf => "von Mises-Fisher",
        ErrorModel::Svmf => "scaled von Mises-Fisher",
    };
    let _ = writeln!(s, "model            {model}");
    let _ = writeln!(s, "cases            {}", data.n());
    let _ = writeln!(s, "dimensions       p = {}, q_s = {}, q_e = {}", d.p, d.q_s, d.q_e);
    let _ = writeln!(s, "log-likelihood   {}", format_number(fit.loglik));
    let _ = writeln!(s, "dof              {}", fit.dof);
    let _ = writeln!(s, "AIC              {}", format_number(fit.aic));
    let _ = writeln!(s, "kappa            {:.6}{}", fit.error.kappa(), if fit.kappa_capped { " (capped)" } else { "" });
    if fit.model == ErrorModel::Svmf {
        let _ = writeln!(s, "scales a2..ap    {}", vector(&fit.error.scales()[1..]));
        let _ = writeln!(s, "gamma01          {}", vector(fit.base.gamma01().as_slice()));
    }
    let _ = writeln!(s, "b01              {}", vector(fit.reparam.b01().as_slice()));
    let _ = writeln!(
        s,
        "converged        {} ({} iterations, gradient {:.2e}, constraint {:.2e})",
        fit.converged, fit.iterations, fit.grad_norm, fit.constraint_residual
    );
    if fit.repeated_singular_values {
        let _ = writeln!(s, "note             repeated singular values; the link parameters are not unique");
    }
    for st in &fit.stages {
        let _ = writeln!(s, "stage {:<10} log-likelihood {}", st.stage, format_number(st.loglik));
    }
    if fit.starts.len() > 1 {
        let _ = writeln!(s, "starts");
        for r in &fit.starts {
            match (&r.loglik, &r.error) {
                (Some(l), _) => {
                    let _ = writeln!(s, "  {:>3}  {}  converged {}", r.id, format_number(*l), r.converged);
                }
                (None, e) => {
                    let _ = writeln!(s, "  {:>3}  failed: {}", r.id, e.as_deref().unwrap_or("unknown"));
                }
            }
        }
    }
    s
}
