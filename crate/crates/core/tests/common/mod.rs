#![allow(clippy::excessive_precision)]

//! Brute-force reference CDFs and quantiles built from the densities alone:
//! adaptive Gauss–Kronrod quadrature with endpoint substitutions, normalized
//! by quadrature, inverted by bisection. Shares no code with the crate.

#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth >= 60 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, tol, depth + 1) + adapt(f, m, b, tol, depth + 1)
}

/// `∫_a^b f` to roughly 1e-15 relative to the integral.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (rough, _) = gk15(f, a, b);
    adapt(f, a, b, (rough.abs() * 1e-15).max(1e-300), 0)
}

/// A law given by `head(x) = ∫_0^x f` for `x ≤ split` and
/// `tail(x) = ∫_x^∞ f` for `x ≥ split`, `f` unnormalized.
pub struct Reference {
    head: Box<dyn Fn(f64) -> f64>,
    tail: Box<dyn Fn(f64) -> f64>,
    split: f64,
    total: f64,
    upper: Option<f64>,
}

impl Reference {
    fn new(head: Box<dyn Fn(f64) -> f64>, tail: Box<dyn Fn(f64) -> f64>, split: f64, upper: Option<f64>) -> Self {
        let total = head(split) + tail(split);
        Self {
            head,
            tail,
            split,
            total,
            upper,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= self.split {
            (self.head)(x) / self.total
        } else {
            1.0 - (self.tail)(x) / self.total
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.upper.unwrap_or(self.split);
        while self.upper.is_none() && self.cdf(hi) < p {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Density `∝ (1 - t)^(k-1) t^(r-1)` on `(0, 1)`.
pub fn beta_paper_order(k: f64, r: f64) -> Reference {
    // t = s^(1/r) near 0, 1 - t = v^(1/k) near 1
    let head = move |x: f64| integrate(&|s: f64| (1.0 - s.powf(1.0 / r)).powf(k - 1.0) / r, 0.0, x.powf(r));
    let tail = move |x: f64| {
        integrate(
            &|v: f64| (1.0 - v.powf(1.0 / k)).powf(r - 1.0) / k,
            0.0,
            (1.0 - x).powf(k),
        )
    };
    Reference::new(Box::new(head), Box::new(tail), 0.5, Some(1.0))
}

/// Density `∝ t^(k-1) (1 + k t / r)^(-(k+r))` on `(0, ∞)`.
pub fn snedecor_fisher(k: f64, r: f64) -> Reference {
    // in y = ln t the integrand t f(t) peaks at t = 1; it behaves like
    // e^(k y) well below t = r/k and like e^(-r y) well above
    let g = move |y: f64| (k * y - (k + r) * (k * y.exp() / r).ln_1p()).exp();
    let knee = (r / k).ln();
    let head = move |x: f64| integrate(&g, x.ln().min(knee) - 50.0 / k - 5.0, x.ln());
    let tail = move |x: f64| integrate(&g, x.ln(), x.ln().max(knee) + 50.0 / r + 5.0);
    Reference::new(Box::new(head), Box::new(tail), 1.0, None)
}

/// Density `∝ t^(a-1) e^(-b t)` on `(0, ∞)`.
pub fn gamma(a: f64, b: f64) -> Reference {
    let head = move |x: f64| integrate(&|s: f64| (-b * s.powf(1.0 / a)).exp() / a, 0.0, x.powf(a));
    // s = e^(-b (t - x))
    let tail = move |x: f64| {
        integrate(
            &|s: f64| {
                let t = x - s.ln() / b;
                ((a - 1.0) * t.ln() - b * x).exp() / b
            },
            0.0,
            1.0,
        )
    };
    Reference::new(Box::new(head), Box::new(tail), a / b, None)
}
