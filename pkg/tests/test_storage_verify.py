import hashlib
import json

import numpy as np
import pytest

from aipp_minmax.core import DimensionError, StationaryCertificate
from aipp_minmax.problems import pc_generate, qvm_constraint, synthetic_libsvm, trr_load
from aipp_minmax.runner import Method, SolveRequest, run_method
from aipp_minmax.storage import (
    load_certificate,
    load_instance,
    manifest_path,
    save_certificate,
    save_instance,
)
from aipp_minmax.verify import verify_certificate, verify_files


@pytest.fixture(scope="module")
def solved(small_qvm):
    outcome = run_method(small_qvm, SolveRequest(Method.RAIPP_S, 1e-2, 1e-1, time_limit=600.0), seed=small_qvm.seed)
    assert outcome.converged
    return outcome


@pytest.fixture(scope="module")
def files(tmp_path_factory, small_qvm, solved):
    root = tmp_path_factory.mktemp("files")
    inst = save_instance(root / "qvm.npz", small_qvm)
    cert = save_certificate(root / "cert.npz", solved.certificate, solved.meta, y0=solved.y0)
    return inst, cert


def test_instance_file_and_manifest(files, small_qvm):
    inst, _ = files
    loaded = load_instance(inst)
    assert loaded.family == "qvm"
    np.testing.assert_array_equal(loaded.D, small_qvm.D)
    np.testing.assert_allclose(loaded.Q, small_qvm.Q)
    assert loaded.curvature == pytest.approx(small_qvm.curvature)
    manifest = json.loads(manifest_path(inst).read_text())
    assert manifest_path(inst).name == "qvm.manifest.json"
    assert manifest["sha256"] == hashlib.sha256(inst.read_bytes()).hexdigest()
    assert manifest["dims"] == [12, 4, 3]
    assert manifest["constants"]["m"] == pytest.approx(small_qvm.problem.m)
    assert "aipp_minmax_version" in manifest


def test_other_families_reload(tmp_path):
    pc = pc_generate(2, 3, seed=6)
    again = load_instance(save_instance(tmp_path / "pc.npz", pc))
    np.testing.assert_array_equal(again.A, pc.A)
    assert again.R == pc.R

    trr = trr_load(synthetic_libsvm(tmp_path / "d.libsvm", 15, 4, seed=1), alpha=5.0, n_features=4)
    again = load_instance(save_instance(tmp_path / "trr.npz", trr))
    np.testing.assert_array_equal(again.features.toarray(), trr.features.toarray())
    assert again.alpha == 5.0
    assert again.source == trr.source


def test_file_kinds_are_checked(files):
    inst, cert = files
    with pytest.raises(ValueError):
        load_instance(cert)
    with pytest.raises(ValueError):
        load_certificate(inst)


def test_certificate_round_trip(files, solved):
    _, path = files
    cert, meta, extras = load_certificate(path)
    np.testing.assert_array_equal(cert.u_bar, solved.certificate.u_bar)
    np.testing.assert_array_equal(cert.y_bar, solved.certificate.y_bar)
    assert cert.r_bar is None
    assert (meta.family, meta.method, meta.xi, meta.rho_x_abs) == (
        solved.meta.family,
        solved.meta.method,
        solved.meta.xi,
        solved.meta.rho_x_abs,
    )
    assert meta.report.acg_iterations == solved.report.acg_iterations
    np.testing.assert_array_equal(extras["y0"], np.zeros(3))


def test_stored_certificate_verifies(files):
    report = verify_files(*files)
    assert report.passed, report.lines()
    assert {c.name for c in report.checks} == {
        "norm_u",
        "x_in_domain",
        "y_bar_recomputed",
        "norm_v",
        "x_inclusion",
        "nash_x",
        "nash_y",
        "smoothing_sandwich",
    }


def test_oversized_u_fails_only_the_norm_check(small_qvm, solved):
    c = solved.certificate
    # constant shifts stay inside the simplex normal cone
    bumped = StationaryCertificate.from_vectors(c.u_bar + 10.0, c.v_bar, c.x_bar, c.y_bar)
    report = verify_certificate(small_qvm, bumped, solved.meta, y0=solved.y0)
    assert report.failed() == ["norm_u"]


def test_tampered_y_is_detected(small_qvm, solved):
    c = solved.certificate
    vertex = np.zeros(c.y_bar.size)
    vertex[int(np.argmin(c.y_bar))] = 1.0
    tampered = StationaryCertificate.from_vectors(c.u_bar, c.v_bar, c.x_bar, vertex)
    report = verify_certificate(small_qvm, tampered, solved.meta, y0=solved.y0)
    assert "y_bar_recomputed" in report.failed()


def test_family_and_shape_mismatch(tmp_path, files, solved):
    _, cert = files
    pc_file = save_instance(tmp_path / "pc.npz", pc_generate(2, 2, seed=1))
    with pytest.raises(DimensionError):
        verify_files(pc_file, cert)
    with pytest.raises(DimensionError):
        verify_certificate(load_instance(pc_file), solved.certificate, solved.meta)


@pytest.mark.slow
def test_constrained_certificate_verifies(tmp_path, small_qvm):
    con = qvm_constraint(small_qvm, 2, seed=0)
    request = SolveRequest(Method.QP_AIPP_S, 1e-2, 1e-1, eta=1e-3, time_limit=600.0)
    outcome = run_method(small_qvm, request, con, seed=small_qvm.seed)
    assert outcome.converged
    inst = save_instance(tmp_path / "qvm.npz", small_qvm)
    cert = save_certificate(tmp_path / "cert.npz", outcome.certificate, outcome.meta, y0=outcome.y0, constraint=outcome.constraint)
    _, meta, extras = load_certificate(cert)
    assert meta.penalty_c == outcome.report.penalty_c_final
    np.testing.assert_array_equal(extras["A"], con.matrix)
    report = verify_files(inst, cert)
    assert report.passed, report.lines()
    assert {"feasibility", "multiplier_identity"} <= {c.name for c in report.checks}
