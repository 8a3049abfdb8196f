import json

import numpy as np
import pytest

from gprj.io import (SampleFileError, format_samples, format_table, parse_samples, read_samples,
                     write_json, write_manifest, write_samples)
from gprj.priors import Hyperparameters
from gprj.rjmcmc import SamplerConfig, run_chain

from conftest import random_dataset


@pytest.fixture(scope="module")
def chain():
    d = random_dataset(np.random.default_rng(1), n=40, p=2)
    return run_chain(d, Hyperparameters(alpha=3.0),
                     SamplerConfig(n_iter=1500, n_burnin=500, thin=10, seed=3))


class TestSamplesFile:
    def test_round_trip_exact(self, chain, tmp_path):
        write_samples(chain, tmp_path / "c.samples")
        back = read_samples(tmp_path / "c.samples")
        assert back.samples == chain.samples
        np.testing.assert_array_equal(back.log_lik, chain.log_lik)
        np.testing.assert_array_equal(back.iterations, chain.iterations)
        assert back.acceptance == chain.acceptance
        assert (back.seed, back.chain_id, back.s_max) == (chain.seed, chain.chain_id, chain.s_max)
        assert format_samples(back) == format_samples(chain)

    def test_record_layout(self, chain):
        line = format_samples(chain).splitlines()[5].split()
        st = chain.samples[0]
        assert int(line[0]) == chain.iterations[0]
        assert int(line[2]) == 2
        assert int(line[5]) == st.J
        assert int(line[6 + st.J]) == st.J + 1
        assert len(line) == 6 + st.J + 1 + st.J + 1

    def corrupt(self, chain, record, new):
        lines = format_samples(chain).splitlines()
        lines[4 + record] = new(lines[4 + record])
        return "\n".join(lines)

    @pytest.mark.parametrize("record", [1, 7])
    def test_bad_float_cites_record(self, chain, record):
        text = self.corrupt(chain, record, lambda l: l.replace(l.split()[3], "nanx", 1))
        with pytest.raises(SampleFileError) as err:
            parse_samples(text)
        assert err.value.row == record and f"record {record}" in str(err.value)

    def test_truncated_record(self, chain):
        text = self.corrupt(chain, 3, lambda l: " ".join(l.split()[:-1]))
        with pytest.raises(SampleFileError) as err:
            parse_samples(text)
        assert err.value.row == 3

    def test_inconsistent_lengths(self, chain):
        def bump(l):
            tok = l.split()
            J = int(tok[5])
            tok[6 + J] = str(J + 2)
            return " ".join(tok + ["1.0"])
        with pytest.raises(SampleFileError, match="record 2"):
            parse_samples(self.corrupt(chain, 2, bump))

    def test_unsorted_splits(self, chain):
        st_idx = next(i for i, s in enumerate(chain.samples) if s.J >= 2)

        def swap(l):
            tok = l.split()
            tok[6], tok[7] = tok[7], tok[6]
            return " ".join(tok)
        with pytest.raises(SampleFileError, match=f"record {st_idx + 1}"):
            parse_samples(self.corrupt(chain, st_idx + 1, swap))

    def test_bad_header(self, chain):
        with pytest.raises(SampleFileError):
            parse_samples(format_samples(chain).replace("gprj-samples 1", "other 1"))
        with pytest.raises(SampleFileError):
            parse_samples(format_samples(chain).replace("# s_max", "# smax"))


class TestTables:
    def test_floats_round_trip(self):
        text = format_table(["a", "b"], [(0.1, "x"), (1 / 3, 2)])
        assert text == "a,b\n0.1,x\n0.3333333333333333,2\n"

    def test_json_and_manifest(self, tmp_path):
        write_json(tmp_path / "a.json", {"b": np.float64(0.5), "a": np.arange(2)})
        assert json.loads((tmp_path / "a.json").read_text()) == {"a": [0, 1], "b": 0.5}
        write_manifest(tmp_path / "m.json", "fit", {"k": 1}, 7)
        m = json.loads((tmp_path / "m.json").read_text())
        assert m["seed"] == 7 and set(m["versions"]) == {"gprj", "numpy", "scipy", "python"}
