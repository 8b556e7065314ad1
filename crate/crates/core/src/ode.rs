//! Adaptive Dormand-Prince 5(4) for two-dimensional first-order systems, with
//! quintic Hermite dense output for the first component.

/// Accepted step endpoint: time, state and derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub y: [f64; 2],
    pub dy: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// End a step exactly where the first component changes sign, so that no
    /// step straddles a zero.
    pub split_at_zeros: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Failure {
    Horizon { t: f64 },
    StepUnderflow { t: f64, h: f64 },
    MaxSteps { t: f64 },
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus embedded fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &[f64; 2], h: f64, terms: &[(f64, &[f64; 2])]) -> [f64; 2] {
    let mut out = *y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrate from `start` until `stop(prev, cur)` returns true, `t_max` is
/// passed, or the step size collapses. `cap(node)` bounds the step taken from
/// `node` on top of `tol.max_step`. Returns every accepted node.
pub fn integrate<F, C, S>(
    f: F,
    start: Node,
    t_max: f64,
    tol: Tolerances,
    cap: C,
    mut stop: S,
) -> Result<Vec<Node>, Failure>
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
    C: Fn(&Node) -> f64,
    S: FnMut(&Node, &Node) -> bool,
{
    let mut nodes = vec![start];
    let mut cur = start;
    let mut h = tol.initial_step.min(tol.max_step).min(cap(&start));
    for _ in 0..tol.max_steps {
        if cur.t >= t_max {
            return Err(Failure::Horizon { t: cur.t });
        }
        let t = cur.t;
        // make t + h exact so stored node times match the data
        h = (t + h) - t;
        let y = cur.y;
        let k1 = cur.dy;
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
            finite &= y_new[i].is_finite() && k7[i].is_finite();
        }
        let err = (0.5 * err).sqrt();
        if !finite || err > 1.0 {
            let shrink = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= shrink;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Failure::StepUnderflow { t, h });
            }
            continue;
        }
        let mut next = Node { t: t + h, y: y_new, dy: k7 };
        if tol.split_at_zeros && y[0] != 0.0 && y_new[0] != 0.0 && y[0].signum() != y_new[0].signum() {
            let root = sign_change(&cur, &next);
            // a sliver [cur, root] would amplify rounding in the dense output,
            // so the step into the zero is retaken from the previous node
            let mut from = cur;
            if root - t < 0.25 * h && nodes.len() >= 2 {
                nodes.pop();
                from = *nodes.last().expect("two nodes present");
            }
            if root > from.t {
                let z = step(&f, &from, root - from.t);
                next = Node { t: root, y: [0.0, z.1[1]], dy: f(root, &[0.0, z.1[1]]) };
            }
        }
        nodes.push(next);
        let done = stop(nodes.get(nodes.len().wrapping_sub(2)).unwrap_or(&cur), &next);
        cur = next;
        if done {
            return Ok(nodes);
        }
        let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * grow).min(tol.max_step).min(cap(&cur));
    }
    Err(Failure::MaxSteps { t: cur.t })
}

/// One unchecked Dormand-Prince step of size h.
fn step<F>(f: &F, from: &Node, h: f64) -> (f64, [f64; 2])
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
{
    let (t, y, k1) = (from.t, from.y, from.dy);
    let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
    let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    (t + h, axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]))
}

/// Bisection on the dense output for the sign change of the first component.
pub fn sign_change(a: &Node, b: &Node) -> f64 {
    let (mut lo, mut hi) = (a.t, b.t);
    let sign_lo = a.y[0].signum();
    while hi - lo > 4.0 * f64::EPSILON * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let v = hermite(a, b, mid)[0];
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quintic Hermite interpolant of the first component on [a.t, b.t], using
/// y0, y0' = y1 and y0'' = dy1 at both ends (second-order systems written as
/// y0' = y1). Returns value, first and second derivative.
pub fn hermite(a: &Node, b: &Node, t: f64) -> [f64; 3] {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let (p0, m0, c0) = (a.y[0], a.y[1] * h, a.dy[1] * h * h);
    let (p1, m1, c1) = (b.y[0], b.y[1] * h, b.dy[1] * h * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    let d00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d20 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d01 = -d00;
    let d11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d21 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let e00 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let e10 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let e20 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
    let e01 = -e00;
    let e11 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let e21 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);
    let v = h00 * p0 + h10 * m0 + h20 * c0 + h01 * p1 + h11 * m1 + h21 * c1;
    let dv = (d00 * p0 + d10 * m0 + d20 * c0 + d01 * p1 + d11 * m1 + d21 * c1) / h;
    let ddv = (e00 * p0 + e10 * m0 + e20 * c0 + e01 * p1 + e11 * m1 + e21 * c1) / (h * h);
    [v, dv, ddv]
}
