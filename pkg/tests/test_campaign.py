import csv
import io
import json

import pytest

from vitalcode.campaign import (CampaignConfig, ConfigError, Threat,
                                build_scheme, load_config, parse_config,
                                resolve_mac_key, run_channel_campaign)
from vitalcode.mac import MAC_KEY_ENV

BASE_DOC = {
    "schemes": ["crc8-atm"],
    "threats": [{"kind": "forge"}],
    "trials": 10,
    "seed": 1,
}


def make_config(**overrides) -> CampaignConfig:
    doc = dict(BASE_DOC)
    doc.update(overrides)
    return parse_config(doc)


class TestConfigParsing:
    def test_minimal(self):
        config = make_config()
        assert config.schemes == ["crc8-atm"]
        assert config.trials == 10
        assert config.threats[0].kind == "forge"

    def test_missing_field_positions_error(self):
        with pytest.raises(ConfigError, match="config.trials"):
            parse_config({"schemes": [], "threats": [], "seed": 0})

    def test_bad_type(self):
        with pytest.raises(ConfigError, match="config.trials"):
            make_config(trials="ten")

    def test_nonpositive_trials(self):
        with pytest.raises(ConfigError, match="config.trials"):
            make_config(trials=0)

    def test_unknown_threat_kind(self):
        with pytest.raises(ConfigError, match=r"config.threats\[0\]"):
            make_config(threats=[{"kind": "teleport"}])

    def test_threat_needs_kind(self):
        with pytest.raises(ConfigError, match=r"config.threats\[0\]"):
            make_config(threats=[{"rate": 0.1}])

    def test_unknown_scheme(self):
        with pytest.raises(ConfigError, match="crc16"):
            make_config(schemes=["crc16"])

    def test_bad_mac_truncation(self):
        with pytest.raises(ConfigError, match="config.mac_truncation"):
            make_config(mac_truncation=12)

    def test_threat_parameters(self):
        config = make_config(threats=[
            {"kind": "bit_error", "rate": 0.01},
            {"kind": "burst", "length": 9},
            {"kind": "brute_force", "attempts": 50},
            {"kind": "forge", "payload_hex": "deadbeef"},
        ])
        labels = [t.label for t in config.threats]
        assert labels == ["bit_error(0.01)", "burst(9)", "brute_force(50)",
                          "forge"]
        assert config.threats[3].payload == bytes.fromhex("deadbeef")

    def test_load_config_reports_json_position(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"schemes": [,]}')
        with pytest.raises(ConfigError, match="line 1"):
            load_config(str(bad))

    def test_load_config_round_trip(self, tmp_path):
        path = tmp_path / "campaign.json"
        path.write_text(json.dumps(BASE_DOC))
        assert load_config(str(path)).trials == 10


class TestSchemeBuilding:
    def test_all_names(self):
        config = make_config(mac_key="00" * 16)
        for name in ("none", "parity", "crc8-atm", "crc32-ieee",
                     "hamming74", "codedsig", "hmac", "hmac-8", "hmac-16",
                     "hmac-32"):
            scheme = build_scheme(name, config)
            assert scheme is not None

    def test_hmac_truncation_from_name(self):
        config = make_config()
        assert build_scheme("hmac-8", config).mac_truncation == 8
        assert build_scheme("hmac", config).mac_truncation == 32

    def test_bad_hmac_truncation_name(self):
        with pytest.raises(ConfigError):
            build_scheme("hmac-12", make_config())

    def test_codedsig_uses_config_key(self):
        config = make_config(key_a=13, coded_signature=20)
        scheme = build_scheme("codedsig", config)
        assert scheme.key.modulus == 13
        assert scheme.signature == 20 % 13


class TestMacKeyResolution:
    def test_env_overrides_config(self, monkeypatch):
        monkeypatch.setenv(MAC_KEY_ENV, "aa" * 16)
        config = make_config(mac_key="bb" * 16)
        key = resolve_mac_key(config)
        from vitalcode.mac import MacKey, hmac_tag
        assert hmac_tag(key, b"m", 8) == \
            hmac_tag(MacKey.from_hex("aa" * 16), b"m", 8)

    def test_config_key_used_when_no_env(self, monkeypatch):
        monkeypatch.delenv(MAC_KEY_ENV, raising=False)
        assert resolve_mac_key(make_config(mac_key="bb" * 16)) is not None
        assert resolve_mac_key(make_config()) is None

    def test_hmac_without_key_is_config_error(self, monkeypatch):
        monkeypatch.delenv(MAC_KEY_ENV, raising=False)
        config = make_config(schemes=["hmac"])
        with pytest.raises(ConfigError, match="MAC key"):
            run_channel_campaign(config)


class TestCampaignSemantics:
    def test_forge_beats_every_keyless_scheme(self):
        config = make_config(
            schemes=["parity", "crc8-atm", "crc32-ieee", "codedsig"],
            threats=[{"kind": "forge"}], trials=50)
        report = run_channel_campaign(config)
        for name in config.schemes:
            cell = report.cell(name, "forge")
            assert cell.accepted == 50, name
            assert cell.accepted_but_wrong == 50, name

    def test_forge_never_beats_hmac(self):
        config = make_config(schemes=["hmac-8"],
                             threats=[{"kind": "forge"}], trials=200,
                             mac_key="0c" * 16)
        cell = run_channel_campaign(config).cell("hmac-8", "forge")
        assert cell.accepted_but_wrong == 0
        assert cell.rejected == 200

    def test_replay_accepted_by_crc_rejected_by_hmac(self):
        config = make_config(schemes=["crc32-ieee", "hmac"],
                             threats=[{"kind": "replay"}], trials=50,
                             mac_key="0d" * 16)
        report = run_channel_campaign(config)
        crc = report.cell("crc32-ieee", "replay")
        assert crc.accepted == 50 and crc.accepted_but_wrong == 50
        hmac_cell = report.cell("hmac", "replay")
        assert hmac_cell.rejected == 50 and hmac_cell.accepted_but_wrong == 0

    def test_splice_rejected_when_residues_differ(self):
        config = make_config(schemes=["codedsig", "hmac"],
                             threats=[{"kind": "splice"}], trials=50,
                             key_a=2**31 - 1, mac_key="0e" * 16)
        report = run_channel_campaign(config)
        # 64-byte random payloads collide mod a 31-bit prime with
        # probability ~5e-10; every splice should be caught.
        assert report.cell("codedsig", "splice").accepted_but_wrong == 0
        assert report.cell("hmac", "splice").accepted_but_wrong == 0

    def test_brute_force_uses_attempts(self):
        config = make_config(
            schemes=["hmac-8"],
            threats=[{"kind": "brute_force", "attempts": 300}],
            trials=5, mac_key="0f" * 16)
        cell = run_channel_campaign(config).cell("hmac-8",
                                                 "brute_force(300)")
        assert cell.delivered == 300
        assert cell.accepted_but_wrong == 0

    def test_noise_on_unprotected_scheme_accepted_wrong(self):
        config = make_config(schemes=["none"],
                             threats=[{"kind": "random_payload"}], trials=50)
        cell = run_channel_campaign(config).cell("none", "random_payload")
        assert cell.accepted == 50
        assert cell.accepted_but_wrong == 50

    def test_burst_against_crc32(self):
        config = make_config(schemes=["crc32-ieee"],
                             threats=[{"kind": "burst", "length": 17}],
                             trials=100)
        cell = run_channel_campaign(config).cell("crc32-ieee", "burst(17)")
        # The CRC covers the payload only.  A burst touching payload or
        # tag is always caught; one confined to the seq/date header fields
        # (~7% of start positions) slips through and alters the telegram.
        assert cell.accepted == cell.accepted_but_wrong
        assert cell.accepted < 20
        assert cell.rejected == cell.delivered - cell.accepted

    def test_hamming_corrects_codeword_flips(self):
        config = make_config(schemes=["hamming74"],
                             threats=[{"kind": "codeword_flip"}], trials=50)
        cell = run_channel_campaign(config).cell("hamming74",
                                                 "codeword_flip")
        assert cell.corrected == 50
        assert cell.miscorrected == 0

    def test_counts_conserved(self):
        config = make_config(
            schemes=["parity", "crc8-atm", "hamming74", "codedsig"],
            threats=[{"kind": "bit_error", "rate": 0.02},
                     {"kind": "forge"}],
            trials=40)
        report = run_channel_campaign(config)
        for cell in report.cells:
            assert cell.accepted + cell.rejected + cell.corrected \
                == cell.delivered
            assert cell.accepted_but_wrong <= cell.accepted
            assert cell.miscorrected <= cell.corrected


class TestReports:
    def test_reports_reproducible(self):
        config = make_config(schemes=["crc8-atm", "codedsig"],
                             threats=[{"kind": "bit_error", "rate": 0.01},
                                      {"kind": "forge"}],
                             trials=30)
        a = run_channel_campaign(config)
        b = run_channel_campaign(config)
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()

    def test_json_shape_and_key_redaction(self):
        config = make_config(schemes=["hmac"], threats=[{"kind": "forge"}],
                             trials=10, mac_key="ab" * 16)
        doc = json.loads(run_channel_campaign(config).to_json())
        assert doc["config"]["mac_key"] == "<configured>"
        assert "ab" * 16 not in json.dumps(doc)
        cell = doc["cells"][0]
        rates = cell["rates"]
        lo, hi = rates["accepted_but_wrong_ci"]
        assert 0.0 <= lo <= rates["accepted_but_wrong"] <= hi <= 1.0

    def test_csv_shape(self):
        config = make_config(trials=10)
        rows = list(csv.reader(io.StringIO(
            run_channel_campaign(config).to_csv())))
        assert rows[0][:3] == ["scheme", "threat", "delivered"]
        assert rows[1][0] == "crc8-atm"
        assert int(rows[1][2]) == 10

    def test_cell_lookup(self):
        report = run_channel_campaign(make_config(trials=5))
        assert report.cell("crc8-atm", "forge").delivered == 5
        with pytest.raises(KeyError):
            report.cell("crc8-atm", "replay")
