# Copyright 2026 The fairweight Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Influence-function sample reweighting for group fairness."""

from ._core import (
    Dataset,
    FairweightError,
    apply_weights,
    epsilon_objective,
    erm_train,
    fairif_train,
    fairness_report,
    generate_scenario,
    generate_scenario_file,
    proposition_check,
    run_cli,
    solve_epsilon,
)

__all__ = [
    "Dataset",
    "FairweightError",
    "apply_weights",
    "epsilon_objective",
    "erm_train",
    "fairif_train",
    "fairness_report",
    "generate_scenario",
    "generate_scenario_file",
    "proposition_check",
    "run_cli",
    "solve_epsilon",
]

__version__ = "0.1.0"
