"""LocMap prediction and localization-aware viewpoint planning.

Configuration arguments are plain dicts using the same keys as the CLI's
JSON config sections; omitted keys keep their defaults.
"""

import json as _json

import numpy as _np

from . import _core
from ._core import Error, Model, Scene, success_rates, upsample

__all__ = [
    "Error",
    "Model",
    "Scene",
    "fif_locmap",
    "generate_dataset",
    "generate_scene",
    "label_waypoint",
    "mapping_sweep",
    "plan",
    "success_rates",
    "train",
    "upsample",
]


def _dump(cfg):
    return _json.dumps(cfg or {})


def generate_scene(spec=None):
    return _core.generate_scene(_dump(spec))


def mapping_sweep(scene, options=None):
    return _core.mapping_sweep(scene, _dump(options))


def label_waypoint(scene, position, options=None, scene_id=0, waypoint_id=0):
    return _core.label_waypoint(scene, _np.asarray(position, float), _dump(options), scene_id, waypoint_id)


def generate_dataset(scenes, path, options=None):
    return _core.generate_dataset(list(scenes), _dump(options), str(path))


def fif_locmap(scene, position, metric="mineig"):
    return _core.fif_locmap(scene, _np.asarray(position, float), metric)


def train(dataset_path, model=None, train_options=None):
    """Returns (Model, loss history)."""
    return _core.train(str(dataset_path), _dump(model), _dump(train_options))


def plan(scene, keypoints, config=None, model=None, metric="mineig"):
    kp = _np.atleast_2d(_np.asarray(keypoints, float))
    return _core.plan(scene, kp, _dump(config), model, metric)
