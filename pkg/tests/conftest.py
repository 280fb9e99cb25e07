"""Shared fixtures.

Curriculum emission dominates setup cost, so the two roots below are
emitted once per session and treated as read-only: a tiny one for
structural checks and a deeper one for trial-protocol walks (the biased
option filters class-0 training draws and needs a real pool behind it).
"""

import pytest

from gestaltbench.dataset import emit_curriculum


@pytest.fixture(scope="session")
def small_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("cur_small")
    emit_curriculum(root, master_seed=77, a1_count=12, c1_count=8)
    return root


@pytest.fixture(scope="session")
def trial_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("cur_trial")
    emit_curriculum(root, master_seed=99, a1_count=400, c1_count=200)
    return root
