"""Quantizer arithmetic, bit transport, and the three benchmark pipelines."""

import numpy as np
import pytest

from jcmlab import autodiff as ad
from jcmlab.autodiff import Tensor
from jcmlab.baselines import (
    AnalogSystem,
    OneBitSystem,
    Uniform8System,
    bits_to_bpsk,
    bits_to_codes,
    bpsk_to_bits,
    codes_to_bits,
    dequantize_8bit,
    one_bit_nn_quantize,
    quantize_uniform_8bit,
)
from jcmlab.channel import ChannelConfig, NOISELESS_SNR_DB
from jcmlab.errors import ConfigError, DomainError
from jcmlab.training import StepContext


class TestUniformQuantizer:
    def test_bottom_of_range_maps_to_code_zero(self):
        codes = quantize_uniform_8bit(np.array([[-1.0]]))
        assert codes[0, 0] == 0
        np.testing.assert_array_equal(codes_to_bits(codes), [[0] * 8])

    def test_top_of_range_clamps_to_255(self):
        assert quantize_uniform_8bit(np.array([[1.0]]))[0, 0] == 255
        assert quantize_uniform_8bit(np.array([[3.7]]))[0, 0] == 255

    def test_round_trip_error_within_half_step(self):
        """|v - dequantize(quantize(v))| <= 1/256 on 10^4 random values."""
        v = np.random.default_rng(0).uniform(-1.0, 1.0, size=10**4)
        err = np.abs(v - dequantize_8bit(quantize_uniform_8bit(v)))
        assert err.max() <= 1.0 / 256.0

    def test_codes_bits_round_trip(self):
        codes = np.arange(256).reshape(1, -1)
        assert np.array_equal(bits_to_codes(codes_to_bits(codes)), codes)

    def test_bits_are_msb_first(self):
        np.testing.assert_array_equal(codes_to_bits(np.array([[128]])), [[1, 0, 0, 0, 0, 0, 0, 0]])
        np.testing.assert_array_equal(codes_to_bits(np.array([[1]])), [[0, 0, 0, 0, 0, 0, 0, 1]])


class TestBpskMapping:
    def test_stated_mapping(self):
        block = bits_to_bpsk(np.array([[0, 1, 1]]))
        np.testing.assert_array_equal(block.values.data, [[-1.0, 1.0, 1.0]])

    def test_noiseless_round_trip(self):
        bits = np.random.default_rng(1).integers(0, 2, size=(4, 16))
        assert np.array_equal(bpsk_to_bits(bits_to_bpsk(bits).values.data), bits)

    def test_exactly_zero_decodes_as_bit_zero(self):
        assert np.array_equal(bpsk_to_bits(np.array([0.0, -0.3, 0.3])), [0, 0, 1])

    def test_fractional_bits_rejected(self):
        with pytest.raises(DomainError):
            bits_to_bpsk(np.array([[0.5]]))


def make_analog(seed=0, d=6, k=8, m=2):
    return AnalogSystem(d, k, m, (10,), (10,), np.random.default_rng(seed))


class TestAnalogSystem:
    def test_transmitted_block_has_unit_average_power(self):
        """Mean power of the normalized block is 1 within 1% over 10^4 samples."""
        system = make_analog(seed=2, d=6, k=10)
        x = Tensor(np.random.default_rng(3).uniform(size=(1000, 6)))
        t, _ = system.transmit(x)
        assert t.data.size == 10**4
        assert (t.data**2).mean() == pytest.approx(1.0, rel=0.01)

    def test_noiseless_receiver_sees_normalized_block_exactly(self):
        system = make_analog(seed=4)
        x = Tensor(np.random.default_rng(5).uniform(size=(3, 6)))
        t, _ = system.transmit(x)
        cfg = ChannelConfig(kind="awgn", snr_db=NOISELESS_SNR_DB, seed=6)
        from jcmlab.channel import awgn_apply

        received = awgn_apply(t, cfg)
        assert np.array_equal(received.data, t.data)

    def test_deterministic_under_fixed_seed(self):
        system = make_analog(seed=7)
        x = np.random.default_rng(8).uniform(size=(4, 6))
        a = system.infer_batch(x, snr_db=3.0, seed=42, index=0)
        b = system.infer_batch(x, snr_db=3.0, seed=42, index=0)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_training_loss_gradients_match_finite_differences(self):
        system = make_analog(seed=9, d=3, k=4, m=2)
        x = Tensor(np.random.default_rng(10).uniform(size=(2, 3)))
        labels = Tensor(np.eye(2))
        ctx = StepContext(step=0, tau=1.0, master_seed=11, snr_db=6.0, lam=0.9)
        err = ad.finite_diff_check(
            lambda: system.training_loss(x, labels, ctx, 0).loss, system.parameters()
        )
        assert err <= 1e-4


class TestUniform8System:
    def test_block_length_must_be_divisible_by_eight(self):
        with pytest.raises(ConfigError):
            Uniform8System(6, 12, 2, (8,), (8,), np.random.default_rng(0))

    def test_encoder_emits_one_real_per_eight_symbols(self):
        system = Uniform8System(6, 32, 2, (8,), (8,), np.random.default_rng(1))
        assert system.values_per_block == 4
        assert system.analog.encoder.out_width == 4

    def test_noiseless_pipeline_matches_analog_within_quantization_error(self):
        """At sigma = 0 the dequantized decoder input is within 1/256 of the analog one."""
        system = Uniform8System(6, 32, 2, (10,), (10,), np.random.default_rng(2))
        x = np.random.default_rng(3).uniform(size=(5, 6))
        # analog decoder input at sigma = 0 is the raw encoder output (gain undone)
        t, gain = system.analog.transmit(Tensor(x))
        analog_input = ad.scale(t, gain).data
        deq = system._bit_pipeline(
            np.clip(system.analog.encoder(Tensor(x)).data, -1, 1),
            NOISELESS_SNR_DB,
            seed=4,
        )
        assert np.abs(deq - analog_input).max() <= 1.0 / 256.0

    def test_analog_mode_training_ignores_quantizer(self):
        rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
        system = Uniform8System(6, 16, 2, (8,), (8,), rng_a, train_mode="analog")
        analog = AnalogSystem(6, 2, 2, (8,), (8,), rng_b)
        x = Tensor(np.random.default_rng(6).uniform(size=(3, 6)))
        labels = Tensor(np.eye(2)[[0, 1, 0]])
        ctx = StepContext(step=1, tau=1.0, master_seed=7, snr_db=4.0, lam=1.0)
        assert system.training_loss(x, labels, ctx, 0).total == analog.training_loss(
            x, labels, ctx, 0
        ).total

    def test_st_mode_runs_full_pipeline_and_propagates_gradients(self):
        system = Uniform8System(4, 16, 2, (6,), (6,), np.random.default_rng(8), train_mode="st")
        x = Tensor(np.random.default_rng(9).uniform(size=(2, 4)))
        labels = Tensor(np.eye(2))
        ctx = StepContext(step=0, tau=1.0, master_seed=10, snr_db=8.0, lam=1.0)
        out = system.training_loss(x, labels, ctx, 0)
        out.loss.backward()
        enc_grads = [w.grad for w in system.analog.encoder.weights]
        assert all(g is not None for g in enc_grads)
        assert any(np.abs(g).max() > 0 for g in enc_grads)

    def test_infer_is_deterministic(self):
        system = Uniform8System(4, 16, 2, (6,), (6,), np.random.default_rng(11))
        x = np.random.default_rng(12).uniform(size=(3, 4))
        a = system.infer_batch(x, snr_db=0.0, seed=13, index=2)
        b = system.infer_batch(x, snr_db=0.0, seed=13, index=2)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestOneBitSystem:
    def test_threshold_rule(self):
        """Sigmoid output above 0.5 decides bit 1; exactly 0.5 decides bit 0."""
        system = OneBitSystem(4, 3, 2, (6,), (6,), np.random.default_rng(0))
        for t in system.quantizer.parameters():
            t.data = np.zeros_like(t.data)
        # zero quantizer -> sigmoid(0) = 0.5 everywhere -> all bits 0
        bits = one_bit_nn_quantize(np.random.default_rng(1).normal(size=(2, 3)), system.quantizer)
        assert np.array_equal(bits, np.zeros((2, 3), dtype=np.int64))
        # push one logit positive -> that bit flips to 1
        system.quantizer.biases[0].data = np.array([2.0, 0.0, 0.0])
        bits = one_bit_nn_quantize(np.zeros((1, 3)), system.quantizer)
        assert np.array_equal(bits, [[1, 0, 0]])

    def test_straight_through_matches_soft_path_gradient(self):
        """ST gradient through hard decisions equals the finite-difference gradient
        of the soft surrogate 2*sigmoid - 1 at the same point."""
        system = OneBitSystem(3, 4, 2, (5,), (5,), np.random.default_rng(2))
        x = Tensor(np.random.default_rng(3).uniform(size=(2, 3)))
        params = system.encoder.parameters() + system.quantizer.parameters()

        def soft_path():
            y = system.quantizer(system.encoder(x))
            return ad.tsum(y * 2.0 - 1.0)

        err = ad.finite_diff_check(soft_path, params)
        assert err <= 1e-6
        for p in params:
            p.grad = None
        soft_path().backward()
        soft_grads = [p.grad.copy() for p in params]
        for p in params:
            p.grad = None
        ad.tsum(system.symbols_soft_st(x)).backward()
        for got, want in zip([p.grad for p in params], soft_grads):
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_hard_symbols_are_bpsk(self):
        system = OneBitSystem(3, 4, 2, (5,), (5,), np.random.default_rng(4))
        sym = system.symbols_soft_st(Tensor(np.random.default_rng(5).uniform(size=(6, 3))))
        assert np.all(np.isin(sym.data, (-1.0, 1.0)))

    def test_training_and_inference_paths_agree_noiselessly(self):
        system = OneBitSystem(3, 4, 2, (5,), (5,), np.random.default_rng(6))
        x = np.random.default_rng(7).uniform(size=(4, 3))
        sym = system.symbols_soft_st(Tensor(x)).data
        bits = one_bit_nn_quantize(system.encoder(Tensor(x)).data, system.quantizer)
        assert np.array_equal(sym, bits.astype(np.float64) * 2.0 - 1.0)
