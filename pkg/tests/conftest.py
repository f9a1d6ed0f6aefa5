import pytest

from spurfilter.acoustics import MicrophoneModel, air_properties
from spurfilter.geometry import FilterGeometry


@pytest.fixture(scope="session")
def air():
    return air_properties(20.0)


@pytest.fixture(scope="session")
def mic():
    # example values, resonance near 3 kHz; not vendor data
    return MicrophoneModel(c_ds=5.3e-14, l_ds=5.3e4, r_ds=1.0e7, v_cal=1.2e-8, v_lf=9e-9,
                           d_ch=1.15e-3, t_pg=0.3e-3)


@pytest.fixture(scope="session")
def design_40k():
    return FilterGeometry(a0=1.5e-3, l0=1.0e-3, a1=3.26e-3, l1=1.4e-3, d_ch=1.15e-3)


@pytest.fixture(scope="session")
def straight_pipe():
    return FilterGeometry(a0=1.5e-3, l0=1.429e-3, a1=1.5e-3, l1=1.429e-3, d_ch=1.15e-3)
