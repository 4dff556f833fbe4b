//! Unit conversions and physical constants.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reference bandwidth for OSNR, Hz.
pub const OSNR_REFERENCE_BANDWIDTH_HZ: f64 = 12.5e9;

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Power attenuation coefficient in 1/km (natural units) from dB/km.
#[inline]
pub fn alpha_db_to_neper(alpha_db_per_km: f64) -> f64 {
    alpha_db_per_km * std::f64::consts::LN_10 / 10.0
}

/// Group-velocity dispersion β2 in ps²/km from the dispersion parameter D in ps/(nm·km).
///
/// β2 = −D·λ²/(2πc).
pub fn beta2_from_dispersion(d_ps_nm_km: f64, wavelength_nm: f64) -> f64 {
    let c_nm_per_ps = SPEED_OF_LIGHT * 1e9 / 1e12;
    -d_ps_nm_km * wavelength_nm * wavelength_nm / (2.0 * std::f64::consts::PI * c_nm_per_ps)
}

/// SNR-to-OSNR bandwidth conversion factor `f_baud / 12.5 GHz`.
#[inline]
pub fn osnr_r_factor(baud_rate_hz: f64) -> f64 {
    baud_rate_hz / OSNR_REFERENCE_BANDWIDTH_HZ
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssmf_beta2_matches_hand_calculation() {
        // 17 * 1550^2 / (2π * 299792.458) = 21.6835...
        let b2 = beta2_from_dispersion(17.0, 1550.0);
        assert!((b2 + 21.6835).abs() < 1e-3, "{b2}");
    }

    #[test]
    fn dbm_round_trip() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!((dbm_to_mw(5.0) - 3.162_277_660_168_379).abs() < 1e-12);
        assert!((mw_to_dbm(dbm_to_mw(-7.3)) + 7.3).abs() < 1e-12);
    }

    #[test]
    fn r_factor_for_68_gbaud() {
        assert!((osnr_r_factor(68e9) - 5.44).abs() < 1e-12);
    }
}
