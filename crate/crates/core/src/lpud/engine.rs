use std::sync::Arc;

use super::{EigenfilterBank, EvidenceForm, EvidenceTracker, NoiseModel};
use crate::error::{Error, Result};
use crate::fdaf::AdaptiveFilter;
use crate::scalar::Real;
use crate::signal::{BlockSpectra, FirStack};
use crate::subspace::SubspaceUnion;

/// Per-block diagnostics of [`Lpud::step`].
#[derive(Debug, Clone)]
pub struct StepReport<T> {
    /// Block index, counting from one.
    pub block: usize,
    pub selected: usize,
    /// Averaged log-evidence of every model after this block.
    pub evidence: Vec<T>,
    /// Whether the estimate was projected onto a newly selected subspace.
    pub switched: bool,
    /// A priori output estimate, `Q` channels of `L` samples.
    pub estimate: Vec<Vec<T>>,
    pub error: Vec<Vec<T>>,
}

/// Update denoising by projection onto the locally best affine subspace.
///
/// Every block: score all models, pick the best, project the estimate when
/// the choice changed, then let the base filter propose an update and keep
/// only its component inside the chosen subspace. With a single model this
/// is the global variant.
#[derive(Debug)]
pub struct Lpud<T: Real, F> {
    filter: F,
    union: Arc<SubspaceUnion<T>>,
    bank: Arc<EigenfilterBank<T>>,
    noise: NoiseModel<T>,
    form: EvidenceForm,
    tracker: EvidenceTracker<T>,
    blocks: usize,
}

impl<T: Real, F: AdaptiveFilter<T>> Lpud<T, F> {
    pub fn new(
        filter: F,
        union: Arc<SubspaceUnion<T>>,
        bank: Arc<EigenfilterBank<T>>,
        noise: NoiseModel<T>,
        form: EvidenceForm,
        forgetting: f64,
    ) -> Result<Self> {
        let dims = filter.dims();
        if union.dims != dims || bank.dims() != dims {
            return Err(Error::Config(format!(
                "filter {dims:?}, union {:?} and eigenfilter bank {:?} disagree",
                union.dims,
                bank.dims()
            )));
        }
        if bank.num_models() != union.num_models() {
            return Err(Error::Config(
                "eigenfilter bank was built for another union".into(),
            ));
        }
        if noise.outputs() != dims.outputs {
            return Err(Error::dim("noise outputs", dims.outputs, noise.outputs()));
        }
        let tracker = EvidenceTracker::new(union.num_models(), forgetting)?;
        Ok(Self {
            filter,
            union,
            bank,
            noise,
            form,
            tracker,
            blocks: 0,
        })
    }

    pub fn filter(&self) -> &F {
        &self.filter
    }

    pub fn tracker(&self) -> &EvidenceTracker<T> {
        &self.tracker
    }

    pub fn union(&self) -> &SubspaceUnion<T> {
        &self.union
    }

    /// Processes one block and updates `h` in place.
    pub fn step(
        &mut self,
        h: &mut FirStack<T>,
        spectra: &BlockSpectra<T>,
        observed: &[Vec<T>],
    ) -> Result<StepReport<T>> {
        let scores = (0..self.union.num_models())
            .map(|i| {
                self.form
                    .evaluate(&self.bank, i, spectra, observed, &self.noise)
            })
            .collect::<Result<Vec<T>>>()?;
        let previous = self.tracker.selected();
        let selected = self.tracker.update(&scores)?;
        let model = &self.union.models[selected];
        let switched = previous != Some(selected);
        if switched {
            let projected = model.project(h.as_slice())?;
            h.as_mut_slice().copy_from_slice(&projected);
        }
        let update = self.filter.step(spectra, observed, h)?;
        let delta = model.project_update(update.delta.as_slice())?;
        for (v, d) in h.as_mut_slice().iter_mut().zip(delta) {
            *v = *v + d;
        }
        self.blocks += 1;
        Ok(StepReport {
            block: self.blocks,
            selected,
            evidence: self.tracker.estimates().to_vec(),
            switched,
            estimate: update.estimate,
            error: update.error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdaf::{Fdaf, FdafParams};
    use crate::linalg::{dot, norm};
    use crate::signal::{BlockStream, FirDims};
    use crate::subspace::{AffineSubspaceModel, SubspaceUnion};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn orthonormal(r: usize, d: usize, rng: &mut crate::seed::Rng) -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < d {
            let mut v: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
            for _ in 0..2 {
                for u in &basis {
                    let p = dot(u, &v);
                    v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
                }
            }
            let n = norm(&v);
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
        basis
    }

    fn union_of(dims: FirDims, dim: usize, models: usize, seed: u64) -> SubspaceUnion<f64> {
        let mut rng = crate::seed::rng(seed);
        let r = dims.len();
        let models = (0..models)
            .map(|_| {
                let offset = (0..r).map(|_| rng.random_range(-0.3..0.3)).collect();
                let eig = (0..dim).map(|k| 0.2 / (k + 1) as f64).collect();
                AffineSubspaceModel::new(offset, orthonormal(r, dim, &mut rng), eig, 10).unwrap()
            })
            .collect();
        SubspaceUnion {
            dims,
            models,
            assignments: Vec::new(),
            seed,
            kmeans_iterations: 0,
        }
    }

    fn engine(union: SubspaceUnion<f64>, k: usize, noise: f64) -> Lpud<f64, Fdaf<f64>> {
        let dims = union.dims;
        let bank = EigenfilterBank::new(&union, k).unwrap();
        Lpud::new(
            Fdaf::new(dims, FdafParams::default()).unwrap(),
            Arc::new(union),
            Arc::new(bank),
            NoiseModel::isotropic(noise, dims.outputs).unwrap(),
            EvidenceForm::Full,
            0.99,
        )
        .unwrap()
    }

    /// Noisy observations of `truth` driven by white noise.
    fn run(
        lpud: &mut Lpud<f64, Fdaf<f64>>,
        truth: &FirStack<f64>,
        blocks: usize,
        noise_std: f64,
        seed: u64,
    ) -> (FirStack<f64>, Vec<StepReport<f64>>) {
        let dims = truth.dims();
        let l = dims.taps;
        let mut rng = crate::seed::rng(seed);
        let mut stream = BlockStream::new(1, l);
        let truth_spectra = crate::signal::stack_spectra(lpud.bank.fft(), truth).unwrap();
        let mut h = FirStack::zeros(dims);
        let mut reports = Vec::new();
        for _ in 0..blocks {
            let x: Vec<f64> = (0..l).map(|_| rng.sample(StandardNormal)).collect();
            stream.advance(&[x]).unwrap();
            let spectra = stream.spectra(lpud.bank.fft()).unwrap();
            let mut y = spectra
                .filter(lpud.bank.fft(), &truth_spectra, dims.outputs)
                .unwrap();
            for c in &mut y {
                c.iter_mut()
                    .for_each(|v| *v += noise_std * rng.sample::<f64, _>(StandardNormal));
            }
            reports.push(lpud.step(&mut h, &spectra, &y).unwrap());
        }
        (h, reports)
    }

    #[test]
    fn first_block_always_projects() {
        let dims = FirDims::new(1, 8, 2).unwrap();
        let mut e = engine(union_of(dims, 3, 2, 1), 2, 0.1);
        let truth = FirStack::from_vec(dims, e.union.models[1].offset.clone()).unwrap();
        let (_, reports) = run(&mut e, &truth, 3, 0.1, 2);
        assert!(reports[0].switched);
        assert_eq!(reports[0].block, 1);
    }

    #[test]
    fn identity_projection_reproduces_base_filter() {
        let dims = FirDims::new(1, 8, 2).unwrap();
        let r = dims.len();
        let mut rng = crate::seed::rng(4);
        let offset = (0..r).map(|_| rng.random_range(-0.3..0.3)).collect();
        let full =
            AffineSubspaceModel::new(offset, orthonormal(r, r, &mut rng), vec![0.1; r], r + 1)
                .unwrap();
        let union = SubspaceUnion {
            dims,
            models: vec![full],
            assignments: Vec::new(),
            seed: 0,
            kmeans_iterations: 0,
        };
        let truth = FirStack::from_vec(dims, (0..r).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let mut e = engine(union, 2, 0.5);
        let (h_lpud, _) = run(&mut e, &truth, 40, 0.3, 9);

        // Same data through the bare filter.
        let mut f = Fdaf::<f64>::new(dims, FdafParams::default()).unwrap();
        let mut rng = crate::seed::rng(9);
        let mut stream = BlockStream::new(1, 8);
        let ts = crate::signal::stack_spectra(f.fft(), &truth).unwrap();
        let mut h = FirStack::zeros(dims);
        for _ in 0..40 {
            let x: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
            stream.advance(&[x]).unwrap();
            let spectra = stream.spectra(f.fft()).unwrap();
            let mut y = spectra.filter(f.fft(), &ts, 2).unwrap();
            for c in &mut y {
                c.iter_mut()
                    .for_each(|v| *v += 0.3 * rng.sample::<f64, _>(StandardNormal));
            }
            let up = f.step(&spectra, &y, &h).unwrap();
            h.add_scaled(1.0, &up.delta).unwrap();
        }
        for (a, b) in h_lpud.as_slice().iter().zip(h.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn estimate_stays_in_selected_subspace() {
        let dims = FirDims::new(1, 16, 2).unwrap();
        for models in [1, 3] {
            let mut e = engine(union_of(dims, 4, models, 7), 4, 0.2);
            let truth = FirStack::from_vec(dims, e.union.models[0].offset.clone()).unwrap();
            let l = dims.taps;
            let mut rng = crate::seed::rng(3);
            let mut stream = BlockStream::new(1, l);
            let ts = crate::signal::stack_spectra(e.bank.fft(), &truth).unwrap();
            let mut h = FirStack::zeros(dims);
            for _ in 0..30 {
                let x: Vec<f64> = (0..l).map(|_| rng.sample(StandardNormal)).collect();
                stream.advance(&[x]).unwrap();
                let spectra = stream.spectra(e.bank.fft()).unwrap();
                let mut y = spectra.filter(e.bank.fft(), &ts, 2).unwrap();
                for c in &mut y {
                    c.iter_mut()
                        .for_each(|v| *v += 0.4 * rng.sample::<f64, _>(StandardNormal));
                }
                let rep = e.step(&mut h, &spectra, &y).unwrap();
                let m = &e.union.models[rep.selected];
                let resid = m.residual_norm(h.as_slice()).unwrap();
                assert!(
                    resid <= 1e-8 * norm(h.as_slice()).max(1.0),
                    "residual {resid}"
                );
                if models == 1 {
                    assert_eq!(rep.selected, 0);
                }
            }
        }
    }

    #[test]
    fn selects_generating_model() {
        let dims = FirDims::new(1, 16, 2).unwrap();
        let mut hits = 0;
        let mut total = 0;
        for trial in 0..10u64 {
            let union = union_of(dims, 4, 4, 100 + trial);
            let j = (trial % 4) as usize;
            let mut rng = crate::seed::rng(trial);
            let m = &union.models[j];
            let mut truth = m.offset.clone();
            for (v, &d) in m.basis.iter().zip(&m.eigenvalues) {
                let b = d.sqrt() * rng.sample::<f64, _>(StandardNormal);
                truth.iter_mut().zip(v).for_each(|(t, u)| *t += b * u);
            }
            let truth = FirStack::from_vec(dims, truth).unwrap();
            let mut e = engine(union, 4, 0.05);
            let (_, reports) = run(&mut e, &truth, 25, 0.05f64.sqrt(), 50 + trial);
            for r in &reports[5..] {
                total += 1;
                hits += usize::from(r.selected == j);
            }
        }
        assert!(hits as f64 >= 0.9 * total as f64, "{hits}/{total}");
    }

    #[test]
    fn rejects_mismatched_parts() {
        let dims = FirDims::new(1, 8, 2).unwrap();
        let union = union_of(dims, 2, 2, 1);
        let bank = EigenfilterBank::new(&union, 2).unwrap();
        let other = FirDims::new(1, 8, 1).unwrap();
        assert!(Lpud::new(
            Fdaf::<f64>::new(other, FdafParams::default()).unwrap(),
            Arc::new(union.clone()),
            Arc::new(bank.clone()),
            NoiseModel::isotropic(1.0, 2).unwrap(),
            EvidenceForm::Full,
            0.99,
        )
        .is_err());
        assert!(Lpud::new(
            Fdaf::<f64>::new(dims, FdafParams::default()).unwrap(),
            Arc::new(union),
            Arc::new(bank),
            NoiseModel::isotropic(1.0, 1).unwrap(),
            EvidenceForm::Full,
            0.99,
        )
        .is_err());
    }
}
