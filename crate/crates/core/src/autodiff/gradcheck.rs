use super::{AutodiffError, Tape, Tensor, Var};

/// Location and size of one gradient disagreement.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckFailure {
    pub input: usize,
    pub element: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub tolerance: f64,
    pub worst_relative_error: f64,
    pub worst: Option<(usize, usize)>,
    pub failures: Vec<GradCheckFailure>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Relative disagreement between two derivative estimates. Magnitudes below
/// `1e-6` are compared on an absolute scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

/// Compares supplied analytic gradients against central differences of `value`.
pub fn compare_with_central_differences<E>(
    mut value: impl FnMut(&[Tensor]) -> Result<f64, E>,
    inputs: &[Tensor],
    analytic: &[Tensor],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, E> {
    let mut report = GradCheckReport {
        checked: 0,
        tolerance,
        worst_relative_error: 0.0,
        worst: None,
        failures: Vec::new(),
    };
    let mut probe: Vec<Tensor> = inputs.to_vec();
    for (i, grad) in analytic.iter().enumerate() {
        if !inputs[i].requires_grad() {
            continue;
        }
        for e in 0..inputs[i].numel() {
            let original = inputs[i].data()[e];
            probe[i].data_mut()[e] = original + step;
            let plus = value(&probe)?;
            probe[i].data_mut()[e] = original - step;
            let minus = value(&probe)?;
            probe[i].data_mut()[e] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = grad.data()[e];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.worst_relative_error || report.worst.is_none() {
                report.worst_relative_error = err;
                report.worst = Some((i, e));
            }
            if !(err < tolerance) {
                report.failures.push(GradCheckFailure {
                    input: i,
                    element: e,
                    analytic: a,
                    numeric,
                    relative_error: err,
                });
            }
        }
    }
    Ok(report)
}

/// Checks the tape gradient of the scalar built by `f` against central
/// differences, for every element of every input marked `requires_grad`.
///
/// `f` must be differentiable at `inputs`: max and nearest-neighbour
/// selections should not be tied within `step`.
pub fn finite_difference_check<E, F>(
    f: F,
    inputs: &[Tensor],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, E>
where
    E: From<AutodiffError>,
    F: Fn(&mut Tape, &[Var]) -> Result<Var, E>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.tensor(v)).collect();

    let value = |probe: &[Tensor]| -> Result<f64, E> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = probe.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item()?)
    };
    compare_with_central_differences(value, inputs, &analytic, step, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes_tightly() {
        let x = Tensor::vector(vec![3.0]).unwrap().with_grad();
        let report = finite_difference_check::<AutodiffError, _>(
            |tape, v| {
                let sq = tape.square(v[0]);
                Ok(tape.sum(sq))
            },
            &[x],
            1e-5,
            1e-8,
        )
        .unwrap();
        assert!(report.passed());
        assert!(report.worst_relative_error < 1e-8);
        assert_eq!(report.checked, 1);
    }

    #[test]
    fn wrong_gradient_rule_is_reported() {
        let x = Tensor::vector(vec![3.0, -1.5]).unwrap().with_grad();
        let value = |p: &[Tensor]| -> Result<f64, AutodiffError> {
            Ok(p[0].data().iter().map(|v| v * v).sum())
        };
        // d/dx x^2 claimed as x instead of 2x
        let wrong = Tensor::vector(vec![3.0, -1.5]).unwrap();
        let report =
            compare_with_central_differences(value, &[x], &[wrong], 1e-5, 1e-4).unwrap();
        assert!(!report.passed());
        assert_eq!(report.failures.len(), 2);
        assert!((report.failures[0].numeric - 6.0).abs() < 1e-6);
    }

    #[test]
    fn inputs_without_grad_are_skipped() {
        let x = Tensor::vector(vec![1.0]).unwrap().with_grad();
        let c = Tensor::vector(vec![2.0]).unwrap();
        let report = finite_difference_check::<AutodiffError, _>(
            |tape, v| {
                let p = tape.mul(v[0], v[1])?;
                Ok(tape.sum(p))
            },
            &[x, c],
            1e-5,
            1e-6,
        )
        .unwrap();
        assert_eq!(report.checked, 1);
        assert!(report.passed());
    }
}
