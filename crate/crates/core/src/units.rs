//! Hartree atomic units (ħ = mₑ = a₀ = 1) and conversions to the lab units
//! used for input and output.

/// One Hartree in meV.
pub const HARTREE_MEV: f64 = 27_211.386;

/// One atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 0.024_188_84;

#[inline]
pub fn mev_to_hartree(e_mev: f64) -> f64 {
    e_mev / HARTREE_MEV
}

#[inline]
pub fn hartree_to_mev(e: f64) -> f64 {
    e * HARTREE_MEV
}

#[inline]
pub fn au_time_to_fs(t: f64) -> f64 {
    t * AU_TIME_FS
}

#[inline]
pub fn fs_to_au_time(t_fs: f64) -> f64 {
    t_fs / AU_TIME_FS
}
