import numpy as np

from mpmab.env import ChannelModel
from mpmab.runner import DynamicsEvent, ExperimentConfig

STATIC_MEANS = [0.29, 0.36, 0.43, 0.50, 0.57, 0.64, 0.71, 0.78]


def homogeneous(means=STATIC_MEANS, occ=None):
    means = np.asarray(means, dtype=float)
    return ChannelModel(means, np.zeros(means.size) if occ is None else np.asarray(occ))


def config(algorithm, users=4, horizon=20000, replications=1, seed=3, means=STATIC_MEANS, params=None, **kw):
    return ExperimentConfig(
        model=homogeneous(means),
        algorithm=algorithm,
        num_users=users,
        horizon=horizon,
        replications=replications,
        seed=seed,
        params=dict(params or {}),
        **kw,
    )


def hetero_config(algorithm, users=4, channels=6, horizon=30000, seed=1, params=None, **kw):
    return ExperimentConfig(
        model=ChannelModel(np.full((1, channels), 0.5), np.zeros(channels), reward_law="uniform"),
        algorithm=algorithm,
        num_users=users,
        horizon=horizon,
        seed=seed,
        means_seed=seed,
        params=dict(params or {}),
        **kw,
    )


def leave_enter(*slots):
    return [DynamicsEvent(s, "leave" if i % 2 == 0 else "enter") for i, s in enumerate(slots)]
