import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcgt.bitstream import Bitstream, BitstreamError
from pcgt.coding import (
    AUTO,
    CloudEncoder,
    QuantConfig,
    block_distortion,
    decode_cloud,
    dequantize,
    encode_cloud,
    lambda_from_qp,
    quantize,
    rdo_select_constrained,
    rdo_select_lagrangian,
    truncate_dims,
)
from pcgt.entropy import EntropyDecodeError
from pcgt.ply_io import PointCloud
from pcgt.synthetic import constant_cloud, surface_cloud
from pcgt.transform import GraphParams

PARAMS = GraphParams(0.3, 0.6)


@pytest.fixture(scope="module")
def enc(small_cloud):
    return CloudEncoder(small_cloud, "Y", PARAMS)


@pytest.mark.parametrize("c, qp, q", [(10.6, 8, 1), (-4.0, 8, -1), (4.0, 8, 1), (0.0, 8, 0), (11.9, 8, 1), (12.0, 8, 2)])
def test_quantize_examples(c, qp, q):
    assert quantize(c, qp) == q


def test_quantize_vector_and_dequantize():
    np.testing.assert_array_equal(quantize(np.array([-12.0, -3.9, 3.9, 12.0]), 8), [-2, 0, 0, 2])
    assert dequantize(-3, 8) == -24.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e6, 1e6), st.integers(1, 200))
def test_quantization_error_bound(c, qp):
    assert abs(c - dequantize(quantize(c, qp), qp)) <= qp / 2 + 1e-9 * abs(c)


def test_truncate_dims():
    np.testing.assert_array_equal(truncate_dims(np.arange(1.0, 6.0), 2), [1, 2, 0, 0, 0])
    np.testing.assert_array_equal(truncate_dims(np.arange(1.0, 4.0), 10), [1, 2, 3])


def test_block_distortion_examples():
    assert block_distortion(np.array([3.0, 4.0, 1.0]), np.array([0.0])) == 9 + 16 + 1
    assert block_distortion(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == 0
    with pytest.raises(ValueError):
        block_distortion(np.array([1.0]), np.array([1.0, 2.0]))


@pytest.mark.parametrize("qp, m, lam", [(8, 0.85, 2.1418657848212845), (0, 0.85, 0.85), (6, 1.0, 2.0), (96, 0.0, 0.0)])
def test_lambda(qp, m, lam):
    assert lambda_from_qp(qp, m) == pytest.approx(lam, rel=1e-15, abs=0)


@pytest.mark.parametrize("kw", [dict(qp=0), dict(qp=8, mode=0), dict(qp=8, mode=70000), dict(qp=8, m=-1), dict(qp=2.5)])
def test_quant_config_validation(kw):
    with pytest.raises(ValueError):
        QuantConfig(**kw)


def test_coefficient_distortion_equals_signal_distortion(enc, small_cloud):
    y = small_cloud.channels["Y"]
    for qp, x in [(8, 4), (32, 32), (96, 200)]:
        res = enc.encode(qp, x)
        ssd = float(np.sum((res.reconstruction["Y"] - y) ** 2))
        assert res.distortion == pytest.approx(ssd, rel=1e-9)


def test_decode_is_bit_exact(enc, small_cloud):
    for qp in (8, 32, 96):
        for x in (4, 32, enc.max_block_size):
            res = enc.encode(qp, x)
            out = decode_cloud(small_cloud, res.data)
            assert np.array_equal(out.channels["Y"], res.reconstruction["Y"])


def test_full_mode_error_bound(enc, small_cloud):
    qp = 16
    res = enc.encode(qp, enc.max_block_size)
    # every coefficient is within qp/2, so the block SSD is within N*(qp/2)^2
    assert res.distortion <= small_cloud.point_count * (qp / 2) ** 2


def test_constant_cloud_reconstruction():
    cloud = constant_cloud(2000, 100.0, seed=1)
    res = encode_cloud(cloud, "Y", PARAMS, QuantConfig(8, 1))
    err = np.abs(res.reconstruction["Y"] - 100.0)
    # only DC survives; each block's DC error is at most qp/2 spread over the block
    assert err.max() <= 4.0 + 1e-9
    assert res.bpp < 1.0


def test_encoding_is_deterministic(small_cloud):
    a = encode_cloud(small_cloud, "Y", PARAMS, QuantConfig(32, 16)).data
    b = encode_cloud(small_cloud, "Y", PARAMS, QuantConfig(32, 16)).data
    assert a == b


def test_three_channel_round_trip(small_cloud):
    res = encode_cloud(small_cloud, ["Y", "Cb", "Cr"], PARAMS, QuantConfig(16, 16))
    assert Bitstream.from_bytes(res.data).header.channel_count == 3
    out = decode_cloud(small_cloud, res.data)
    for name in ("Y", "Cb", "Cr"):
        assert np.array_equal(out.channels[name], res.reconstruction[name])


def test_header_carries_float32_params(small_cloud):
    res = encode_cloud(small_cloud, "Y", GraphParams(0.35, 0.55), QuantConfig(32, 8))
    h = Bitstream.from_bytes(res.data).header
    assert h.f == float(np.float32(0.35)) and h.t == float(np.float32(0.55))
    assert np.array_equal(decode_cloud(small_cloud, res.data).channels["Y"], res.reconstruction["Y"])


def test_wrong_point_count_rejected(enc, small_cloud):
    data = enc.encode(32, 8).data
    with pytest.raises(BitstreamError):
        decode_cloud(PointCloud(small_cloud.positions[:-1]), data)


def test_reordered_geometry_changes_output(enc, small_cloud):
    res = enc.encode(8, 32)
    perm = np.random.default_rng(0).permutation(small_cloud.point_count)
    out = decode_cloud(PointCloud(small_cloud.positions[perm]), res.data)
    assert not np.array_equal(out.channels["Y"], res.reconstruction["Y"])


def test_truncated_bitstream_rejected(enc, small_cloud):
    data = enc.encode(32, 8).data
    with pytest.raises((BitstreamError, EntropyDecodeError)):
        decode_cloud(small_cloud, data[:-4])


def test_missing_channel(small_cloud):
    with pytest.raises(KeyError):
        CloudEncoder(PointCloud(small_cloud.positions), "Y", PARAMS)


def independent_costs(cloud, qp, modes, m):
    lam = lambda_from_qp(qp, m)
    out = {}
    for x in modes:
        res = CloudEncoder(cloud, "Y", PARAMS).encode(qp, x)
        bits = 8 * len(res.data)
        out[x] = (res.distortion + lam * bits, bits, res.distortion)
    return out


@pytest.mark.parametrize("qp", [8, 48])
def test_lagrangian_rdo_matches_exhaustive(small_cloud, qp):
    modes = [4, 8, 16, 32, 64]
    mode, table = rdo_select_lagrangian(small_cloud, "Y", PARAMS, qp, 0.85, modes)
    costs = independent_costs(small_cloud, qp, modes, 0.85)
    best = min(modes, key=lambda x: (costs[x][0], x))
    assert mode == best
    assert {c.mode: c.cost for c in table} == {x: v[0] for x, v in costs.items()}


def test_zero_multiplier_picks_most_dims(enc):
    mode, _ = rdo_select_lagrangian(None, "Y", PARAMS, 8, 0.0, [4, 16, 64], encoder=enc)
    assert mode == 64


def test_single_candidate(enc):
    assert rdo_select_lagrangian(None, "Y", PARAMS, 8, 0.85, [16], encoder=enc)[0] == 16
    with pytest.raises(ValueError):
        rdo_select_lagrangian(None, "Y", PARAMS, 8, 0.85, [], encoder=enc)


def test_constrained_matches_brute_force(enc, small_cloud):
    modes = [4, 8, 16, 32, 64]
    n = small_cloud.point_count
    rows = {x: enc.encode(8, x) for x in modes}
    for r_max in (0.3, 0.7, 1.5, 3.0, 100.0):
        choice = rdo_select_constrained(None, "Y", PARAMS, 8, modes, r_max, encoder=enc)
        ok = [x for x in modes if rows[x].total_bits / n <= r_max]
        if ok:
            assert choice.feasible
            assert choice.mode == min(ok, key=lambda x: (rows[x].distortion, x))
        else:
            assert not choice.feasible
            assert choice.mode == min(modes, key=lambda x: (rows[x].total_bits, x))


def test_constrained_infeasible_flag(enc, small_cloud):
    res = encode_cloud(small_cloud, "Y", PARAMS, QuantConfig(8, AUTO), r_max=1e-6, encoder=enc)
    assert not res.feasible
    assert res.mode == min(res.candidates, key=lambda c: (c.rate_bits, c.mode)).mode


def test_rmax_with_fixed_mode_rejected(enc, small_cloud):
    with pytest.raises(ValueError):
        encode_cloud(small_cloud, "Y", PARAMS, QuantConfig(8, 8), r_max=0.7, encoder=enc)


def test_distortion_non_increasing_in_mode(enc):
    for qp in (8, 32, 96):
        d = [enc.encode(qp, x).distortion for x in (1, 4, 8, 16, 32, 64, 128, 200)]
        assert all(a >= b for a, b in zip(d, d[1:]))


def test_rate_falls_with_qp(enc):
    for x in (4, 32):
        bits = [enc.encode(qp, x).total_bits for qp in (8, 16, 32, 48, 64, 80, 96)]
        assert all(a >= b for a, b in zip(bits, bits[1:]))


def test_tiny_cloud():
    cloud = surface_cloud(50, seed=2)
    res = encode_cloud(cloud, "Y", PARAMS, QuantConfig(8, 64))
    assert np.array_equal(decode_cloud(cloud, res.data).channels["Y"], res.reconstruction["Y"])
    one = PointCloud([[1.0, 2.0, 3.0]], {"Y": [77.0]})
    res = encode_cloud(one, "Y", PARAMS, QuantConfig(8, 4))
    assert decode_cloud(one, res.data).channels["Y"][0] == 80.0
