import numpy as np
import pytest

import rangefuse as rf

# reference-power / threshold pairs used throughout; the -37.47 / -100 dBm
# combination at alpha 4 gives a pseudo range of ~36.58 m
PARAMS_44 = rf.ChannelParams(
    p_ref_dbm=-37.47, alpha=4.0, sigma_db=4.0, rss_threshold_dbm=-100.0
)
# threshold chosen so the pseudo range is exactly 10 m
PARAMS_SHARP = rf.ChannelParams(
    p_ref_dbm=-37.47, alpha=4.0, sigma_db=0.01, rss_threshold_dbm=-77.47
)
PARAMS_DISK = rf.ChannelParams(
    p_ref_dbm=-37.47, alpha=4.0, sigma_db=0.0, rss_threshold_dbm=-77.47
)
# measured-deployment calibration: alpha 2.3, sigma 3.92, -55 dBm floor
PARAMS_FIELD = rf.ChannelParams(
    p_ref_dbm=-37.47, alpha=2.3, sigma_db=3.92, rss_threshold_dbm=-55.0
)


@pytest.fixture(scope="session")
def model44():
    return rf.build_fd_model(PARAMS_44)


@pytest.fixture(scope="session")
def model_field():
    return rf.build_fd_model(PARAMS_FIELD)


@pytest.fixture(scope="session")
def big_report(model44):
    """5000-trial, 8-probe run shared by the acceptance and trend tests."""
    fracs = np.linspace(0.1, 1.0, 8)
    cfg = rf.ExperimentConfig(
        channel=PARAMS_44,
        mu=20.0,
        distances=tuple(float(f) * model44.d_th for f in fracs),
        trials=5000,
        seed=20260809,
    )
    return rf.run_experiment(cfg, model=model44)
