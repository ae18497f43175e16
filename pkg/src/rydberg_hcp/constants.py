"""Unit conversions between Hartree atomic units and laboratory units.

Everything inside the package works in atomic units; these constants are
applied only when reading configuration or writing output.
"""

AU_TIME_S = 2.418884e-17
AU_TIME_FS = AU_TIME_S * 1e15
AU_TIME_PS = AU_TIME_S * 1e12
AU_FIELD_V_PER_CM = 5.142207e9
AU_FIELD_KV_PER_CM = AU_FIELD_V_PER_CM * 1e-3
HARTREE_CM1 = 219474.6313632

#: Impulse calibration for the half-cycle pulse, in hbar / bohr.
Q_NOMINAL = 0.0043
#: Nominal FWHM of the half-cycle pulse.
FWHM_NOMINAL_FS = 440.0
#: Nominal split-operator step.
DT_NOMINAL_FS = 10.0


def fs_to_au(t_fs):
    return t_fs / AU_TIME_FS


def au_to_fs(t_au):
    return t_au * AU_TIME_FS


def ps_to_au(t_ps):
    return t_ps / AU_TIME_PS


def au_to_ps(t_au):
    return t_au * AU_TIME_PS
