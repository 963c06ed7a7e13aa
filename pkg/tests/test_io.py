import hashlib
import json

import pytest

from stratmean.errors import (
    CorrelationOutOfRange,
    DegenerateSlope,
    MalformedHeader,
    MalformedRow,
    SingletonStratum,
    UnknownDataset,
)
from stratmean.io import (
    builtin_dataset,
    dataset_csv,
    parse_micro_csv,
    parse_summary_csv,
    read_report,
    write_report,
    write_summary_csv,
)
from stratmean.moments import pre_table
from stratmean.montecarlo import FinitePopulation

from helpers import random_designs

GOLDEN_SHA256 = "6dd732aa4d22861a3c790af1e4a3b091e24acfaadb18c93d9138503649a7ccd4"

TABLE_41 = """stratum_id,N,n,mean_x,mean_y,sd_x,sd_y,rho
1,106,9,24375,536,49189,6425,0.82
2,106,17,27421,2212,57461,11552,0.86
3,94,38,72409,9384,160757,29907,0.90
4,171,67,74365,5588,285603,28643,0.99
5,204,7,26441,967,45403,2390,0.71
6,173,2,9844,404,18794,946,0.89
"""


class TestSummary:
    def test_table_41_transcription(self, kadilar):
        parsed = parse_summary_csv(TABLE_41)
        for a, b in zip(parsed.strata, kadilar.strata):
            for f in ("id", "N", "n", "mean_x", "mean_y", "sd_x", "sd_y", "rho", "cov_xy", "weight", "fpc"):
                assert getattr(a, f) == getattr(b, f)

    def test_crlf(self, kadilar):
        parsed = parse_summary_csv(TABLE_41.replace("\n", "\r\n"))
        assert parsed.strata == parse_summary_csv(TABLE_41).strata

    def test_empty_body(self):
        with pytest.raises(MalformedRow, match="no strata"):
            parse_summary_csv(TABLE_41.splitlines()[0] + "\n")

    def test_rho_out_of_range(self):
        text = TABLE_41.replace("0.99", "1.5")
        with pytest.raises(CorrelationOutOfRange, match="'4'.*line 5"):
            parse_summary_csv(text)

    def test_bad_header(self):
        with pytest.raises(MalformedHeader):
            parse_summary_csv("id,N,n\n1,2,3\n")
        with pytest.raises(MalformedHeader):
            parse_summary_csv("")

    def test_bad_number_reports_line_and_column(self):
        text = TABLE_41.replace("27421", "27,421")
        with pytest.raises(MalformedRow) as info:
            parse_summary_csv(text)
        assert info.value.line == 3
        text = TABLE_41.replace("94,38", "94,abc")
        with pytest.raises(MalformedRow) as info:
            parse_summary_csv(text)
        assert (info.value.line, info.value.column) == (4, "n")

    def test_f_override_column(self):
        text = TABLE_41.replace("rho\n", "rho,cx,cy,beta2x,f_override\n", 1)
        lines = text.splitlines()
        lines = [lines[0]] + [ln + ",,,,0.5" for ln in lines[1:]]
        d = parse_summary_csv("\n".join(lines))
        assert all(s.fpc == 0.5 for s in d.strata)
        assert d.f_convention == "tabulated"


class TestBuiltin:
    def test_shape(self, kadilar):
        assert (kadilar.N, kadilar.n, len(kadilar)) == (854, 140, 6)
        s4 = kadilar.strata[3]
        assert (s4.rho, s4.sd_x, s4.sd_y) == (0.99, 285603, 28643)
        assert s4.cx == 3.84 and s4.beta2x == 97.60

    def test_unknown(self):
        with pytest.raises(UnknownDataset, match="kadilar-cingi-1999"):
            builtin_dataset("nope")

    def test_golden_checksum(self):
        text = dataset_csv("kadilar-cingi-1999")
        assert hashlib.sha256(text.encode()).hexdigest() == GOLDEN_SHA256

    def test_tabulated_variant(self, kadilar_tab):
        assert [s.fpc for s in kadilar_tab.strata] == [0.102, 0.049, 0.016, 0.009, 0.138, 0.006]


class TestRoundTrip:
    def test_design_csv_round_trip(self):
        for d in random_designs(20, 200):
            assert parse_summary_csv(write_summary_csv(d)) == d

    def test_builtin_round_trip(self, kadilar_tab):
        again = parse_summary_csv(write_summary_csv(kadilar_tab), name=kadilar_tab.name)
        assert again == kadilar_tab

    def test_report_json_round_trip(self, kadilar):
        rep = pre_table(kadilar)
        back = read_report(write_report(rep, "json"))
        assert back == rep

    def test_json_schema(self, kadilar):
        doc = json.loads(write_report(pre_table(kadilar), "json"))
        assert list(doc) == ["dataset", "f_convention", "estimators", "lambda_opt", "a_opt", "bias_tp"]
        assert [e["id"] for e in doc["estimators"]][0] == "mean"
        assert set(doc["lambda_opt"]) == {"lambda1", "lambda2"}

    def test_table_format(self, kadilar):
        text = write_report(pre_table(kadilar), "table")
        assert "S.No." in text and "ESTIMATORS" in text and "PRE'S" in text
        assert "100.00" in text
        assert write_report(pre_table(kadilar), "table") == text

    def test_mean_only_table(self, kadilar):
        text = write_report(pre_table(kadilar, ["mean"]), "table")
        rows = [ln for ln in text.splitlines() if ln[:1].isdigit()]
        assert len(rows) == 1 and rows[0].split()[1:3] == ["mean", "100.00"]


class TestMicro:
    def test_hand_moments(self):
        text = "stratum_id,y,x\na,1,2\na,3,6\nb,10,1\nb,14,2\n"
        smp = parse_micro_csv(text)
        a, b = smp.strata
        assert (a.mean_y, a.mean_x) == (2.0, 4.0)
        # a: dy = (-1, 1), dx = (-2, 2) -> var_y=2, var_x=8, cov=4
        assert (a.var_y, a.var_x, a.cov, a.slope) == (2.0, 8.0, 4.0, 0.5)
        # b: dy = (-2, 2), dx = (-0.5, 0.5) -> var_y=8, var_x=0.5, cov=2
        assert (b.var_y, b.var_x, b.cov, b.slope) == (8.0, 0.5, 2.0, 4.0)

    def test_first_appearance_order(self):
        smp = parse_micro_csv("stratum_id,y,x\nz,1,2\na,3,6\nz,1,1\na,2,2\n")
        assert smp.ids == ("z", "a")

    def test_identical_x_lazy(self):
        smp = parse_micro_csv("stratum_id,y,x\na,1,5\na,3,5\n")
        assert smp.strata[0].var_x == 0
        with pytest.raises(DegenerateSlope):
            smp.strata[0].slope

    def test_duplicate_header(self):
        with pytest.raises(MalformedRow) as info:
            parse_micro_csv("stratum_id,y,x\nstratum_id,y,x\na,1,2\n")
        assert info.value.line == 2

    def test_singleton(self):
        with pytest.raises(SingletonStratum):
            parse_micro_csv("stratum_id,y,x\na,1,2\na,2,3\nb,1,1\n")

    def test_census(self):
        pop = parse_micro_csv("stratum_id,y,x\na,1,2\na,3,6\na,5,7\n", census=True)
        assert isinstance(pop, FinitePopulation)
        assert pop.mean_y == 3.0
