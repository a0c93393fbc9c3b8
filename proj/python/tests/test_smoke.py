# Copyright 2026 The TID Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import pathlib
import struct
import subprocess

import numpy as np
import pytest

import tid_engine

CLI = os.environ.get("TID_CLI")
needs_cli = pytest.mark.skipif(not CLI, reason="TID_CLI not set")


def read_tidt(path):
    raw = pathlib.Path(path).read_bytes()
    assert raw[:4] == b"TIDT"
    version, ndim = struct.unpack_from("<II", raw, 4)
    assert version == 1
    dims = struct.unpack_from("<%dI" % ndim, raw, 12)
    return np.frombuffer(raw, dtype="<f4", offset=12 + 4 * ndim).reshape(dims)


def write_tidt(path, arr):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    header = b"TIDT" + struct.pack("<II", 1, arr.ndim) + struct.pack("<%dI" % arr.ndim, *arr.shape)
    pathlib.Path(path).write_bytes(header + arr.tobytes())


def load_bundle(sidecar):
    sidecar = pathlib.Path(sidecar)
    meta = json.loads(sidecar.read_text())
    return {k: read_tidt(sidecar.parent / meta[k]) for k in ("feature", "class_scores", "pred_boxes")}


def small_bundle(h=4, w=5, c=2, k=3):
    boxes = np.zeros((h, w, 4), np.float32)
    boxes[..., 2:] = 2.0
    return {
        "feature": np.zeros((c, h, w), np.float32),
        "class_scores": np.full((h, w, k), 0.25, np.float32),
        "pred_boxes": boxes,
    }


def test_version():
    assert tid_engine.__version__ == "0.1.0"


def test_identical_features():
    f = np.random.default_rng(0).standard_normal((3, 4, 4)).astype(np.float32)
    loss, grad = tid_engine.tid_loss_and_grad(f, f, np.ones((4, 4), np.float32))
    assert loss == 0.0
    assert grad.shape == f.shape
    assert not grad.any()


def test_single_element():
    loss, grad = tid_engine.tid_loss_and_grad(
        np.full((1, 1, 1), 4.0), np.full((1, 1, 1), 1.0), np.full((1, 1), 2.0)
    )
    assert loss == 18.0
    assert grad.dtype == np.float32
    assert grad.reshape(-1).tolist() == [-12.0]


def test_non_contiguous_input_is_copied():
    f = np.arange(2 * 3 * 4, dtype=np.float64).reshape(2, 4, 3).transpose(0, 2, 1)
    s = np.zeros((2, 3, 4))
    loss_a, _ = tid_engine.tid_loss_and_grad(f, s, np.ones((3, 4)))
    loss_b, _ = tid_engine.tid_loss_and_grad(np.ascontiguousarray(f), s, np.ones((3, 4)))
    assert loss_a == loss_b


def test_loss_shape_mismatch():
    with pytest.raises(ValueError):
        tid_engine.tid_loss_and_grad(np.zeros((2, 3, 3)), np.zeros((2, 3, 4)), np.ones((3, 3)))


def test_empty_gt_is_all_low():
    b = small_bundle()
    v, mask = tid_engine.tid_value_map(b, b, [], {})
    assert v.shape == (4, 5)
    assert not v.any()
    assert not mask.any()


def test_value_map_with_gt():
    b = small_bundle()
    gt = [{"box": [0.0, 0.0, 2.0, 2.0], "label": 1}]
    v, mask = tid_engine.tid_value_map(b, b, gt, {"gamma-key": 0.2, "thrd_pos": 0.6})
    assert v.max() > 0.0
    assert (mask >= 0.0).all()


def test_malformed_inputs_raise():
    b = small_bundle()
    bad = dict(b, pred_boxes=np.zeros((4, 5, 3), np.float32))
    with pytest.raises(ValueError):
        tid_engine.tid_value_map(bad, b, [], {})
    with pytest.raises(ValueError):
        tid_engine.tid_value_map({"feature": b["feature"]}, b, [], {})
    with pytest.raises(ValueError):
        tid_engine.tid_value_map(b, b, [], {"gamma": 0.1})
    with pytest.raises(ValueError):
        tid_engine.tid_value_map(b, b, [{"box": [0, 0, 0, 1], "label": 0}], {})


@needs_cli
@pytest.mark.parametrize("seed", range(10))
def test_value_map_matches_cli(tmp_path, seed):
    run = lambda *a: subprocess.run([CLI, *a], check=True, capture_output=True)
    run("generate", "--seed", str(seed), "--out", str(tmp_path))
    files = ["--teacher", str(tmp_path / "teacher.json"), "--student", str(tmp_path / "student.json"),
             "--gt", str(tmp_path / "gt.json")]
    run("mask", "--gamma-weak", "0.2", "--out", str(tmp_path / "m"), *files)

    gt = json.loads((tmp_path / "gt.json").read_text())
    v, mask = tid_engine.tid_value_map(
        load_bundle(tmp_path / "teacher.json"), load_bundle(tmp_path / "student.json"), gt, {"gamma_weak": 0.2}
    )
    assert v.tobytes() == read_tidt(tmp_path / "m" / "v.tidt").tobytes()
    assert mask.tobytes() == read_tidt(tmp_path / "m" / "mask.tidt").tobytes()

    rng = np.random.default_rng(seed)
    t = rng.standard_normal((3, 6, 7)).astype(np.float32)
    s = rng.standard_normal((3, 6, 7)).astype(np.float32)
    m = rng.uniform(0.0, 2.0, (6, 7)).astype(np.float32)
    for name, arr in (("t", t), ("s", s), ("mk", m)):
        write_tidt(tmp_path / f"{name}.tidt", arr)
    out = run("loss", "--teacher", str(tmp_path / "t.tidt"), "--student", str(tmp_path / "s.tidt"),
              "--mask", str(tmp_path / "mk.tidt"), "--emit-grad", "--out", str(tmp_path / "g"))
    loss, grad = tid_engine.tid_loss_and_grad(t, s, m)
    assert json.loads(out.stdout)["total"] == pytest.approx(loss, abs=5e-13)
    assert "%.12f" % loss in out.stdout.decode()
    assert grad.tobytes() == read_tidt(tmp_path / "g" / "grad_student.tidt").tobytes()
