//! Normalizing constant `c_p(kappa) = (2 pi)^{p/2} I_nu(kappa) / kappa^nu`,
//! `nu = p/2 - 1`, of the von Mises-Fisher distribution, and the mean
//! resultant length `A_p(kappa) = I_{nu+1}(kappa) / I_nu(kappa)`.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Below this argument the power series is used, above it the asymptotic expansion.
pub const BESSEL_SWITCH: f64 = 50.0;

/// `log(I_nu(x) / x^nu)` for `x >= 0`; finite at `x = 0`.
pub fn log_bessel_i_scaled(nu: f64, x: f64) -> f64 {
    if x < BESSEL_SWITCH {
        series_scaled(nu, x)
    } else {
        asymptotic(nu, x) - nu * x.ln()
    }
}

/// `log I_nu(x)` for `x > 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    if x < BESSEL_SWITCH {
        series_scaled(nu, x) + nu * x.ln()
    } else {
        asymptotic(nu, x)
    }
}

// I_nu(x)/x^nu = 2^-nu sum_k (x/2)^{2k} / (k! Gamma(k + nu + 1))
fn series_scaled(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < 1e-17 * sum && k > 0.5 * x {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    -nu * std::f64::consts::LN_2 - ln_gamma(nu + 1.0) + sum.ln()
}

// I_nu(x) ~ e^x / sqrt(2 pi x) sum_k (-1)^k prod_{j<=k} (4nu^2 - (2j-1)^2) / (k! (8x)^k)
fn asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0f64;
    loop {
        k += 1.0;
        let next = -term * (mu - (2.0 * k - 1.0).powi(2)) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

/// `log c_p(kappa)`; at `kappa = 0` this is the log surface area of `S^{p-1}`.
pub fn vmf_log_norm_const(p: usize, kappa: f64) -> f64 {
    let pf = p as f64;
    if p == 3 {
        return (4.0 * PI).ln() + log_sinhc(kappa);
    }
    let nu = pf / 2.0 - 1.0;
    0.5 * pf * (2.0 * PI).ln() + log_bessel_i_scaled(nu, kappa)
}

/// `log(sinh(k)/k)`.
fn log_sinhc(k: f64) -> f64 {
    if k < 1e-4 {
        k * k / 6.0 - k.powi(4) / 180.0
    } else if k < 20.0 {
        (k.sinh() / k).ln()
    } else {
        k - (2.0 * k).ln() + (-(-2.0 * k).exp()).ln_1p()
    }
}

/// Mean resultant length `A_p(kappa)`, the derivative of `log c_p`.
pub fn mean_resultant_length(p: usize, kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    if p == 3 {
        if kappa < 1e-3 {
            return kappa / 3.0 - kappa.powi(3) / 45.0;
        }
        return 1.0 / kappa.tanh() - 1.0 / kappa;
    }
    let nu = p as f64 / 2.0 - 1.0;
    if kappa < 1e-3 {
        // leading terms of the series
        return kappa / p as f64 * (1.0 - kappa * kappa / (p as f64 * (p as f64 + 2.0)));
    }
    (log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa)).exp()
}

/// Log surface area of `S^{p-1}`: `log(2 pi^{p/2} / Gamma(p/2))`.
pub fn log_sphere_area(p: usize) -> f64 {
    let h = p as f64 / 2.0;
    std::f64::consts::LN_2 + h * PI.ln() - ln_gamma(h)
}
