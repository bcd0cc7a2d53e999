//! CSV tables, gnuplot scripts and atomic output directories.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::harness::{AlgorithmKind, ConsistencyResult, RmseCurve};
use crate::spectrum::AngleSpectrum;

/// Format with 9 significant digits in the style of C's `%.9g`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            sign,
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn spectrum_csv(spectrum: &AngleSpectrum, power_column: &str) -> String {
    let mut out = format!("angle_deg,{power_column}\n");
    for (a, p) in spectrum.grid().points().iter().zip(spectrum.power()) {
        let _ = writeln!(out, "{},{}", fmt_num(*a), fmt_num(*p));
    }
    out
}

pub fn rmse_csv(curves: &[RmseCurve]) -> String {
    let mut out = String::from("algorithm,snr_db,rmse_deg,n_trials,stderr_deg\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.algorithm,
                fmt_num(p.snr_db),
                fmt_num(p.rmse_deg),
                c.n_trials,
                fmt_num(p.stderr_deg)
            );
        }
    }
    out
}

fn angles(spectrum: &AngleSpectrum, support: &[usize]) -> String {
    support
        .iter()
        .map(|&j| fmt_num(spectrum.grid().angle(j)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn consistency_summary_csv(result: &ConsistencyResult) -> String {
    let mut out = String::from("trial,support_deg,matches_modal\n");
    for (i, t) in result.trials.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            i,
            angles(&t.spectrum, &t.support),
            t.support == result.modal_support
        );
    }
    out
}

pub fn stability_csv(result: &ConsistencyResult) -> String {
    format!(
        "n_trials,stability_score,modal_support_deg\n{},{},{}\n",
        result.trials.len(),
        fmt_num(result.stability),
        angles(&result.aggregate, &result.modal_support)
    )
}

pub fn spectrum_file_name(kind: AlgorithmKind) -> String {
    format!("{kind}.csv")
}

pub fn trial_file_name(index: usize) -> String {
    format!("trial_{index:03}.csv")
}

pub fn gnuplot_spectra(files: &[String]) -> String {
    let mut out = String::from(
        "set datafile separator ','\nset key autotitle columnhead\n\
         set xlabel 'angle (deg)'\nset ylabel 'normalized power'\nset xrange [-90:90]\nplot ",
    );
    let series: Vec<String> = files
        .iter()
        .map(|f| {
            format!(
                "'{f}' using 1:2 with lines title '{}'",
                f.trim_end_matches(".csv")
            )
        })
        .collect();
    out.push_str(&series.join(", \\\n     "));
    out.push('\n');
    out
}

pub fn gnuplot_rmse(curves: &[RmseCurve]) -> String {
    let mut out = String::from(
        "set datafile separator ','\nset xlabel 'SNR (dB)'\nset ylabel 'RMSE (deg)'\nset logscale y\nplot ",
    );
    let series: Vec<String> = curves
        .iter()
        .map(|c| {
            format!(
                "'rmse.csv' using (strcol(1) eq '{0}' ? $2 : 1/0):3 with linespoints title '{0}'",
                c.algorithm
            )
        })
        .collect();
    out.push_str(&series.join(", \\\n     "));
    out.push('\n');
    out
}

/// Write `files` into `out_dir` so that either all of them appear or none
/// do: everything is staged in a temporary directory inside `out_dir` and
/// renamed into place afterwards.
pub fn commit(out_dir: &Path, files: &[(String, String)]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let staging = tempfile::Builder::new()
        .prefix(".doa-staging-")
        .tempdir_in(out_dir)?;
    for (name, body) in files {
        fs::write(staging.path().join(name), body)?;
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, _) in files {
        let target = out_dir.join(name);
        fs::rename(staging.path().join(name), &target)?;
        written.push(target);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(-90.0), "-90");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 1e-7), "6.66666667e-08");
        assert_eq!(fmt_num(123456789012.0), "1.23456789e+11");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(12.5), "12.5");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn commit_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let files = vec![
            ("a.csv".to_string(), "x\n".to_string()),
            ("b.csv".to_string(), "y\n".to_string()),
        ];
        let written = commit(&out, &files).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(out.join("b.csv")).unwrap(), "y\n");
        let leftovers: Vec<_> = fs::read_dir(&out).unwrap().collect();
        assert_eq!(leftovers.len(), 2);
    }
}
