/// Autonomous or time-varying ODE `ẏ = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// Classic fixed-step fourth-order Runge–Kutta with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + dt` in place.
    pub fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &mut [f64], dt: f64) {
        let h2 = 0.5 * dt;
        sys.rhs(t, y, &mut self.k1);
        for (i, v) in self.tmp.iter_mut().enumerate() {
            *v = y[i] + h2 * self.k1[i];
        }
        sys.rhs(t + h2, &self.tmp, &mut self.k2);
        for (i, v) in self.tmp.iter_mut().enumerate() {
            *v = y[i] + h2 * self.k2[i];
        }
        sys.rhs(t + h2, &self.tmp, &mut self.k3);
        for (i, v) in self.tmp.iter_mut().enumerate() {
            *v = y[i] + dt * self.k3[i];
        }
        sys.rhs(t + dt, &self.tmp, &mut self.k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Number of fixed steps covering `horizon`.
pub fn step_count(dt: f64, horizon: f64) -> usize {
    (horizon / dt - 1e-9).ceil().max(0.0) as usize
}

/// Integrates from `t = 0` for `n_steps` steps of size `dt`. `observe` is
/// called with `(step index, t, y)` at the start and after every step; an
/// `Err` from it aborts the run.
pub fn integrate<S, F, E>(
    sys: &S,
    y: &mut [f64],
    dt: f64,
    n_steps: usize,
    mut observe: F,
) -> Result<(), E>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[f64]) -> Result<(), E>,
{
    let mut rk = Rk4::new(sys.dim());
    observe(0, 0.0, y)?;
    for k in 0..n_steps {
        let t = k as f64 * dt;
        rk.step(sys, t, y, dt);
        observe(k + 1, (k + 1) as f64 * dt, y)?;
    }
    Ok(())
}
