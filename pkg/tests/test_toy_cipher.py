import pytest

from hiddensum.differential import delta_uniformity
from hiddensum.gf2 import BitMatrix, PermutationTable, mat_rank
from hiddensum.hidden_sum import is_op_affine
from hiddensum.toy_cipher import (
    DEFAULT_CONVENTION,
    FieldConvention,
    ToyCipherSpec,
    all_conventions,
    build_hidden_sum_6,
    build_sbox,
    convention_search,
    decrypt,
    default_spec,
    encrypt,
    encryption_table,
    format_spec,
    gf8_mul,
    is_proper_mixing,
    mixing_matrix,
    parse_spec,
    round_function,
    trapdoor_check,
)

from .oracles import (
    LAMBDA,
    from_tuple,
    gf8_eval_sbox,
    gf8_exp_table,
    row_times,
    to_tuple,
)


def oracle_sbox(exponents):
    """S-box under a convention, built from the discrete-log evaluator."""
    def to_field(x):
        return sum(((x >> i) & 1) << e for i, e in enumerate(exponents))

    def from_field(y):
        return sum(((y >> e) & 1) << i for i, e in enumerate(exponents))

    return tuple(from_field(gf8_eval_sbox(to_field(x))) for x in range(8))


@pytest.fixture(scope="module")
def spec():
    return default_spec()


class TestField:
    def test_mul_matches_log_tables(self):
        exp = gf8_exp_table()
        log = {v: k for k, v in enumerate(exp)}
        for x in range(8):
            for y in range(8):
                want = 0 if not x or not y else exp[(log[x] + log[y]) % 7]
                assert gf8_mul(x, y) == want

    def test_alpha6_constant(self):
        # sbox(0) is the constant alpha^6 = alpha^2 + 1, i.e. (1, 0, 1)
        assert gf8_exp_table()[6] == 0b101
        assert build_sbox(FieldConvention((0, 1, 2), "row"))(0) == 0b101


class TestSbox:
    @pytest.mark.parametrize("conv", all_conventions(), ids=lambda c: c.id)
    def test_matches_oracle(self, conv):
        assert build_sbox(conv).images == oracle_sbox(conv.exponents)

    @pytest.mark.parametrize("conv", all_conventions(), ids=lambda c: c.id)
    def test_four_uniform(self, conv):
        s = build_sbox(conv)
        assert s.is_bijective()
        assert delta_uniformity(s) == 4

    def test_default_tables(self):
        assert build_sbox(DEFAULT_CONVENTION).images == (6, 2, 5, 3, 0, 4, 7, 1)
        assert build_sbox(FieldConvention((0, 1, 2), "row")).images == (5, 0, 4, 1, 3, 7, 6, 2)

    def test_convention_ids(self):
        ids = [c.id for c in all_conventions()]
        assert len(ids) == len(set(ids)) == 12
        assert all(FieldConvention.from_id(i).id == i for i in ids)
        for bad in ("a12-row", "a112-row", "a012-diag", "012-row"):
            with pytest.raises(ValueError):
                FieldConvention.from_id(bad)


class TestMixing:
    def test_matches_printed(self):
        m = mixing_matrix()
        assert m.rows == tuple(from_tuple(r) for r in LAMBDA)
        assert mat_rank(m) == 6

    def test_proper(self):
        assert is_proper_mixing(mixing_matrix())
        assert is_proper_mixing(mixing_matrix().transpose())

    def test_block_diagonal_is_improper(self):
        assert not is_proper_mixing(BitMatrix.identity(6))


class TestCipher:
    def test_round_zero(self, spec):
        s = oracle_sbox(DEFAULT_CONVENTION.exponents)
        gamma = s[0] | (s[0] << 3)
        want = from_tuple(row_times(to_tuple(gamma, 6), LAMBDA))
        assert round_function(0, 0, spec) == want == 0x37

    def test_round_key_is_added_last(self, spec):
        for k in range(64):
            assert round_function(5, k, spec) == round_function(5, 0, spec) ^ k

    def test_col_action_uses_transpose(self):
        spec = ToyCipherSpec(FieldConvention((0, 1, 2), "col"), 1)
        s = spec.sbox.images
        for x in range(64):
            y = s[x & 7] | (s[x >> 3] << 3)
            # lambda . y^T: output bit i is row i dotted with y
            want = sum((bin(r & y).count("1") & 1) << i for i, r in enumerate(mixing_matrix().rows))
            assert round_function(x, 0, spec) == want

    def test_one_round_key_zero_is_lambda_gamma(self):
        spec = default_spec(rounds=1)
        lg = spec.lambda_gamma_table()
        assert all(encrypt(v, 0, spec) == lg(v) for v in range(64))

    def test_encryption_delta_lower_bound(self, spec):
        for k in range(64):
            assert delta_uniformity(encryption_table(k, spec)) >= 8

    def test_decrypt_inverts_encrypt(self, spec):
        for k in range(64):
            table = encryption_table(k, spec)
            assert table.is_bijective()
            assert all(decrypt(c, k, spec) == v for v, c in enumerate(table.images))

    def test_zero_rounds_is_identity(self):
        spec = default_spec(rounds=0)
        assert all(encrypt(v, 9, spec) == v for v in range(64))

    def test_encryption_is_hidden_affine(self, spec):
        hidden = build_hidden_sum_6()
        for k in range(64):
            assert is_op_affine(encryption_table(k, spec), hidden)

    def test_encryption_not_plus_affine(self, spec):
        # delta(f, +) of a +-affine map would be 64
        assert delta_uniformity(encryption_table(0, spec)) < 64

    def test_negative_rounds(self):
        with pytest.raises(ValueError):
            ToyCipherSpec(DEFAULT_CONVENTION, rounds=-1)

    def test_non_bijective_sbox(self):
        with pytest.raises(ValueError):
            ToyCipherSpec(DEFAULT_CONVENTION, sbox=PermutationTable(3, (0, 0, 1, 2, 3, 4, 5, 6)))


class TestTrapdoor:
    def test_hidden_sum_6_bricks(self):
        p = build_hidden_sum_6()
        assert p.mul(1, 2) == 4 and p.mul(8, 16) == 32
        assert p.mul(1, 8) == 0

    def test_default_passes(self, spec):
        report = trapdoor_check(spec)
        assert report.passed
        assert set(report.verdicts) == {f"sigma_e{i}" for i in range(1, 7)} | {"lambda_gamma"}
        assert "trapdoor PRESENT" in report.text()

    def test_search_reproduces_default(self):
        result = convention_search()
        assert result.chosen == DEFAULT_CONVENTION
        passing = sorted(cid for cid, r in result.matrix.items() if r.passed)
        assert passing == ["a120-row", "a210-row"]
        assert len(result.matrix) == 12

    def test_failing_convention_reports_lambda_gamma(self):
        report = trapdoor_check(ToyCipherSpec(FieldConvention((0, 1, 2), "row")))
        assert not report.passed
        # translations never depend on the convention
        assert all(report.verdicts[f"sigma_e{i}"] for i in range(1, 7))
        assert not report.verdicts["lambda_gamma"]


class TestSpecFile:
    def test_roundtrip(self, spec):
        assert parse_spec(format_spec(spec)) == spec

    def test_shipped_file(self, spec):
        from pathlib import Path
        text = (Path(__file__).parent.parent / "data" / "toy.spec").read_text()
        assert parse_spec(text) == spec

    @pytest.mark.parametrize("text", ["", "convention=a120-row\nrounds=2\n", "rounds 3\n"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            parse_spec(text)
