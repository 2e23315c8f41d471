// Classical fixed-step RK4 with reusable stage buffers.

pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// Advances `z` by one step. Every component is updated with the same
    /// sequence of floating-point operations regardless of the state width.
    pub(crate) fn step<F>(&mut self, z: &mut [f64], dt: f64, mut rhs: F)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let half = 0.5 * dt;
        rhs(z, &mut self.k1);
        for ((s, z), k) in self.stage.iter_mut().zip(&*z).zip(&self.k1) {
            *s = z + half * k;
        }
        rhs(&self.stage, &mut self.k2);
        for ((s, z), k) in self.stage.iter_mut().zip(&*z).zip(&self.k2) {
            *s = z + half * k;
        }
        rhs(&self.stage, &mut self.k3);
        for ((s, z), k) in self.stage.iter_mut().zip(&*z).zip(&self.k3) {
            *s = z + dt * k;
        }
        rhs(&self.stage, &mut self.k4);
        let sixth = dt / 6.0;
        for (i, z) in z.iter_mut().enumerate() {
            *z += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}
