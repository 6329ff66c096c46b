# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ------------------------------------------------------------------------


"""Python interface to the cfxl core.

Configs may be given as a YAML string, a path to a YAML file, or a nested dict
mirroring the YAML sections. Keyword overrides use "section.key" or bare keys.
"""

import json
import os

import yaml

from ._core import (
    ConfigError,
    checkpoint_version,
    correlation_matrix,
    detect_convergence,
    fractional_baseline,
    layer2_allocate,
    priority_ranked,
    priority_simple,
    summary_version,
)
from . import _core

__all__ = [
    "ConfigError",
    "checkpoint_version",
    "config_hash",
    "correlation_matrix",
    "detect_convergence",
    "evaluate",
    "fractional_baseline",
    "layer2_allocate",
    "priority_ranked",
    "priority_simple",
    "resolve_config",
    "simulate",
    "summary_version",
    "train",
]


def _yaml_text(config):
    if config is None:
        return ""
    if isinstance(config, dict):
        return yaml.safe_dump(config)
    if isinstance(config, os.PathLike) or (isinstance(config, str) and "\n" not in config and os.path.isfile(config)):
        with open(config) as f:
            return f.read()
    return config


def _overrides(kw):
    out = {}
    for k, v in kw.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, (list, tuple)):
            v = ",".join(str(x) for x in v)
        out[k.replace("__", ".")] = str(v)
    return out


def resolve_config(config=None, preset="", seed=None, **overrides):
    """Resolved configuration as a dict."""
    text = _core.resolve_config(_yaml_text(config), preset, _overrides(overrides), seed)
    return yaml.safe_load(text)


def config_hash(config=None):
    return _core.config_hash(_yaml_text(config))


def simulate(config=None, preset="", seed=None, mc_draws=1000, out_dir="", **overrides):
    doc = _core.simulate(_yaml_text(config), preset, _overrides(overrides), seed, mc_draws, str(out_dir))
    return json.loads(doc)


def train(config=None, preset="", seed=None, out_dir="", trajectory=True, checkpoint=True, **overrides):
    """Run one training job; returns the summary document."""
    doc = _core.train(_yaml_text(config), preset, _overrides(overrides), seed, str(out_dir), trajectory, checkpoint)
    return json.loads(doc)


def evaluate(checkpoint, out_dir=""):
    return _core.evaluate(str(checkpoint), str(out_dir))
