use crate::grid::Grid;
use nalgebra::Vector3;

const WINDOW: i64 = 11;
const HALF: i64 = WINDOW / 2;
const SIGMA: f64 = 1.5;
const C1: f64 = 1e-4;
const C2: f64 = 9e-4;

fn gaussian_taps() -> [f64; WINDOW as usize] {
    let mut g = [0.0; WINDOW as usize];
    let mut sum = 0.0;
    for (i, t) in g.iter_mut().enumerate() {
        let d = i as f64 - HALF as f64;
        *t = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
        sum += *t;
    }
    for t in &mut g {
        *t /= sum;
    }
    g
}

/// In-bounds tap mass at each position of a length-`len` axis; divides
/// the blur near borders so a constant image blurs to itself.
fn renorm_1d(len: usize, taps: &[f64; WINDOW as usize]) -> Vec<f64> {
    (0..len as i64)
        .map(|p| {
            (-HALF..=HALF)
                .filter(|k| (0..len as i64).contains(&(p + k)))
                .map(|k| taps[(k + HALF) as usize])
                .sum()
        })
        .collect()
}

struct Blur {
    taps: [f64; WINDOW as usize],
    wu: Vec<f64>,
    wv: Vec<f64>,
}

impl Blur {
    fn new(width: usize, height: usize) -> Self {
        let taps = gaussian_taps();
        Blur { wu: renorm_1d(width, &taps), wv: renorm_1d(height, &taps), taps }
    }

    /// Separable renormalized Gaussian blur.
    fn apply(&self, img: &Grid<f64>) -> Grid<f64> {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let horiz = Grid::from_fn(img.width(), img.height(), |c, r| {
            let mut acc = 0.0;
            for k in -HALF..=HALF {
                let u = c as i64 + k;
                if (0..w).contains(&u) {
                    acc += self.taps[(k + HALF) as usize] * img[(u as usize, r)];
                }
            }
            acc / self.wu[c]
        });
        Grid::from_fn(img.width(), img.height(), |c, r| {
            let mut acc = 0.0;
            for k in -HALF..=HALF {
                let v = r as i64 + k;
                if (0..h).contains(&v) {
                    acc += self.taps[(k + HALF) as usize] * horiz[(c, v as usize)];
                }
            }
            acc / self.wv[r]
        })
    }

    /// Adjoint of `apply` under the standard inner product:
    /// ⟨apply(x), y⟩ = ⟨x, adjoint(y)⟩.
    fn adjoint(&self, img: &Grid<f64>) -> Grid<f64> {
        let (w, h) = (img.width() as i64, img.height() as i64);
        // Reverse order of the passes; each 1D adjoint gathers with the
        // renormalization evaluated at the source position.
        let vert = Grid::from_fn(img.width(), img.height(), |c, r| {
            let mut acc = 0.0;
            for k in -HALF..=HALF {
                let v = r as i64 - k;
                if (0..h).contains(&v) {
                    acc += self.taps[(k + HALF) as usize] * img[(c, v as usize)] / self.wv[v as usize];
                }
            }
            acc
        });
        Grid::from_fn(img.width(), img.height(), |c, r| {
            let mut acc = 0.0;
            for k in -HALF..=HALF {
                let u = c as i64 - k;
                if (0..w).contains(&u) {
                    acc += self.taps[(k + HALF) as usize] * vert[(u as usize, r)] / self.wu[u as usize];
                }
            }
            acc
        })
    }
}

fn hadamard(a: &Grid<f64>, b: &Grid<f64>) -> Grid<f64> {
    Grid::from_vec(
        a.width(),
        a.height(),
        a.iter().zip(b.iter()).map(|(x, y)| x * y).collect(),
    )
}

/// Σ_p s(p) of the windowed structural similarity of one channel, plus
/// d(Σ s)/dx if requested. `y` is the fixed reference.
fn ssim_channel(x: &Grid<f64>, y: &Grid<f64>, blur: &Blur, grad: Option<&mut Grid<f64>>) -> f64 {
    let mu_x = blur.apply(x);
    let mu_y = blur.apply(y);
    let mxx = blur.apply(&hadamard(x, x));
    let myy = blur.apply(&hadamard(y, y));
    let mxy = blur.apply(&hadamard(x, y));

    let (w, h) = (x.width(), x.height());
    let mut sum = 0.0;
    let mut d_mu = Grid::fill(w, h, 0.0);
    let mut d_mxx = Grid::fill(w, h, 0.0);
    let mut d_mxy = Grid::fill(w, h, 0.0);
    let want_grad = grad.is_some();
    for r in 0..h {
        for c in 0..w {
            let (ux, uy) = (mu_x[(c, r)], mu_y[(c, r)]);
            let sx = mxx[(c, r)] - ux * ux;
            let sy = myy[(c, r)] - uy * uy;
            let sxy = mxy[(c, r)] - ux * uy;
            let a = 2.0 * ux * uy + C1;
            let b = 2.0 * sxy + C2;
            let cc = ux * ux + uy * uy + C1;
            let dd = sx + sy + C2;
            let s = a * b / (cc * dd);
            sum += s;
            if want_grad {
                let d_sxy = 2.0 * a / (cc * dd);
                let d_sxx = -s / dd;
                let d_mu_direct = 2.0 * uy * b / (cc * dd) - 2.0 * s * ux / cc;
                d_mxx[(c, r)] = d_sxx;
                d_mxy[(c, r)] = d_sxy;
                // σx² and σxy also depend on the means.
                d_mu[(c, r)] = d_mu_direct - 2.0 * ux * d_sxx - uy * d_sxy;
            }
        }
    }
    if let Some(out) = grad {
        let g_mu = blur.adjoint(&d_mu);
        let g_mxx = blur.adjoint(&d_mxx);
        let g_mxy = blur.adjoint(&d_mxy);
        for r in 0..h {
            for c in 0..w {
                out[(c, r)] +=
                    g_mu[(c, r)] + 2.0 * x[(c, r)] * g_mxx[(c, r)] + y[(c, r)] * g_mxy[(c, r)];
            }
        }
    }
    sum
}

fn channel(img: &Grid<Vector3<f64>>, i: usize) -> Grid<f64> {
    img.map(|v| v[i])
}

fn check_dims(a: &Grid<Vector3<f64>>, b: &Grid<Vector3<f64>>) -> crate::Result<()> {
    if a.width() != b.width() || a.height() != b.height() || a.is_empty() {
        return Err(crate::SplatError::invalid(format!(
            "image dimensions {}x{} vs {}x{} unusable",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean structural similarity over pixels and channels, in [−1, 1]
/// (1 for identical images). Windows near the border renormalize over
/// their in-bounds taps.
pub fn ssim(a: &Grid<Vector3<f64>>, b: &Grid<Vector3<f64>>) -> crate::Result<f64> {
    check_dims(a, b)?;
    let blur = Blur::new(a.width(), a.height());
    let mut sum = 0.0;
    for i in 0..3 {
        sum += ssim_channel(&channel(a, i), &channel(b, i), &blur, None);
    }
    Ok(sum / (3 * a.len()) as f64)
}

/// Mean absolute error over pixels and channels, plus an optional
/// structural dissimilarity term `ssim_weight · (1 − SSIM)/2`.
pub fn photometric_loss(
    rendered: &Grid<Vector3<f64>>,
    target: &Grid<Vector3<f64>>,
    ssim_weight: f64,
) -> crate::Result<f64> {
    check_dims(rendered, target)?;
    let n = (3 * rendered.len()) as f64;
    let l1: f64 = rendered
        .iter()
        .zip(target.iter())
        .map(|(r, t)| (r - t).abs().sum())
        .sum::<f64>()
        / n;
    let mut loss = l1;
    if ssim_weight != 0.0 {
        loss += ssim_weight * (1.0 - ssim(rendered, target)?) / 2.0;
    }
    Ok(loss)
}

/// Loss plus dL/d(rendered) per pixel and channel.
pub fn photometric_loss_grad(
    rendered: &Grid<Vector3<f64>>,
    target: &Grid<Vector3<f64>>,
    ssim_weight: f64,
) -> crate::Result<(f64, Grid<Vector3<f64>>)> {
    check_dims(rendered, target)?;
    let n = (3 * rendered.len()) as f64;
    let mut l1 = 0.0;
    let mut grad = Grid::fill(rendered.width(), rendered.height(), Vector3::zeros());
    for (i, (r, t)) in rendered.iter().zip(target.iter()).enumerate() {
        let diff = r - t;
        l1 += diff.abs().sum();
        // f64::signum maps ±0 to ±1; pick the zero subgradient instead.
        grad.as_mut_slice()[i] = diff.map(|d| if d == 0.0 { 0.0 } else { d.signum() }) / n;
    }
    let mut loss = l1 / n;
    if ssim_weight != 0.0 {
        let blur = Blur::new(rendered.width(), rendered.height());
        let mut ssim_sum = 0.0;
        for i in 0..3 {
            let mut ch_grad = Grid::fill(rendered.width(), rendered.height(), 0.0);
            ssim_sum += ssim_channel(
                &channel(rendered, i),
                &channel(target, i),
                &blur,
                Some(&mut ch_grad),
            );
            // d/dx of ssim_weight·(1 − Σs/n)/2.
            let k = -ssim_weight / (2.0 * n);
            for (g, cg) in grad.iter_mut().zip(ch_grad.iter()) {
                g[i] += k * cg;
            }
        }
        loss += ssim_weight * (1.0 - ssim_sum / n) / 2.0;
    }
    Ok((loss, grad))
}
