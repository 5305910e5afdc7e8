//! Dense diagnostics of one snapshot.

use std::path::Path;

use qgpe::diagnostics::{
    correlation_g, count_vortices_2d, energy_spectra, kinetic_energies, soliton_density, vortex_line_density_3d,
};
use qgpe::dns::DenseField;
use qgpe::io::{save_csv, CorrelationRow, DiagnosticRow, ProfileRow, SpectrumRow};

use crate::config::Diagnostic;
use crate::error::CliResult;

/// Compute the requested diagnostics of `field` at time `t`.
///
/// Scalar results go into the returned row (NaN when not requested or not
/// defined in this dimension); spectra and correlations are written to
/// `spectrum_<index>.csv` and `correlation_<index>.csv` under `dir`, and
/// 1D profiles are appended to `profile`.
pub fn analyze_field(
    field: &DenseField,
    t: f64,
    background: f64,
    diagnostics: &[Diagnostic],
    dir: &Path,
    index: usize,
    profile: &mut Vec<ProfileRow>,
) -> CliResult<DiagnosticRow> {
    let dims = field.grid().dims();
    let mut row = DiagnosticRow { t, n_vortex: f64::NAN, e_ki: f64::NAN, e_kc: f64::NAN, rho_soliton: f64::NAN };
    for diagnostic in diagnostics {
        match diagnostic {
            Diagnostic::Vortices if dims == 2 => row.n_vortex = count_vortices_2d(field)?.total() as f64,
            Diagnostic::Vortices if dims == 3 => row.n_vortex = vortex_line_density_3d(field)?.length,
            Diagnostic::Energies if dims >= 2 => (row.e_ki, row.e_kc) = kinetic_energies(field, background)?,
            Diagnostic::SolitonDensity => row.rho_soliton = soliton_density(field, background)?,
            Diagnostic::Spectra if dims >= 2 => {
                let bins = energy_spectra(field, background, None)?;
                let rows: Vec<SpectrumRow> = bins
                    .centers
                    .iter()
                    .zip(bins.incompressible.iter().zip(&bins.compressible))
                    .map(|(&k, (&e_ki, &e_kc))| SpectrumRow { k, e_ki, e_kc })
                    .collect();
                save_csv(&dir.join(format!("spectrum_{index:05}.csv")), &rows)?;
            }
            Diagnostic::Correlation => {
                let g = correlation_g(field)?;
                let rows: Vec<CorrelationRow> =
                    g.separations.iter().zip(&g.values).map(|(&l, &g)| CorrelationRow { l, g }).collect();
                save_csv(&dir.join(format!("correlation_{index:05}.csv")), &rows)?;
            }
            Diagnostic::Profile if dims == 1 => {
                let h = field.grid().spacing(0);
                profile.extend(field.density().into_iter().enumerate().map(|(i, rho)| ProfileRow { t, x: i as f64 * h, rho }));
            }
            other => log::warn!("diagnostic {other:?} is not defined for {dims}D fields; skipped"),
        }
    }
    Ok(row)
}
