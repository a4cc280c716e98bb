use super::experiments::ConvergenceRecord;
use crate::error::{domain, Result};

/// Least-squares fit of `ln dtv` against `ln(n / ln n)`, returning
/// `(slope, intercept)`. A slope near `-1` is the `log(n)/n` rate.
pub fn fit_rate(records: &[ConvergenceRecord]) -> Result<(f64, f64)> {
    if records.len() < 3 {
        return domain(format!("rate fit needs at least 3 records, got {}", records.len()));
    }
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::with_capacity(records.len());
    for r in records {
        if !(r.dtv > 0.0) || r.n < 2 {
            return domain(format!("rate fit needs dtv > 0 and n >= 2, got n={} dtv={}", r.n, r.dtv));
        }
        let n = r.n as f64;
        xs.push((n / n.ln()).ln());
        ys.push(r.dtv.ln());
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return domain("rate fit needs at least two distinct n");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::experiments::Method;

    fn records(f: impl Fn(f64) -> f64) -> Vec<ConvergenceRecord> {
        [64, 128, 256, 512, 1024]
            .into_iter()
            .map(|n| ConvergenceRecord {
                n,
                m: 1,
                delta: 0.0,
                method: Method::ExactDp,
                dtv: f(n as f64),
                stderr: 0.0,
                seed: 0,
            })
            .collect()
    }

    #[test]
    fn exact_rate_has_unit_slope() {
        let (slope, intercept) = fit_rate(&records(|n| 7.0 * n.ln() / n)).unwrap();
        assert!((slope + 1.0).abs() < 1e-6);
        assert!((intercept - 7f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn root_rate_is_shallower() {
        let (slope, _) = fit_rate(&records(|n| 1.0 / n.sqrt())).unwrap();
        // ln(n / ln n) grows slower than ln n, steepening the fit a little
        assert!(slope < -0.5 && slope > -0.7, "{slope}");
    }

    #[test]
    fn degenerate_inputs() {
        let recs = records(|n| 1.0 / n);
        assert!(fit_rate(&recs[..2]).is_err());
        let mut zero = recs.clone();
        zero[1].dtv = 0.0;
        assert!(fit_rate(&zero).is_err());
        let same: Vec<_> = (0..3).map(|_| recs[0].clone()).collect();
        assert!(fit_rate(&same).is_err());
    }
}
