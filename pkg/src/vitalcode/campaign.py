"""Channel campaign: schemes x threats, with JSON/CSV reports.

Each campaign cell sends `trials` telegrams under one protection scheme,
applies one threat (accidental noise or adversarial transformation) to
every frame, and tallies the receiver verdicts.  `accepted_but_wrong` is
the safety/security failure metric: frames the receiver accepted whose
content differs from what the sender emitted (or that the sender never
emitted at all, as with replays).
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
from dataclasses import dataclass, field

from . import telegram as tg
from .channel_codes import CRC_CATALOG
from .coded_core import make_key
from .mac import MAC_KEY_ENV, MacKey, TAG_LENGTHS
from .stats import wilson_interval

DEFAULT_PAYLOAD_LENGTH = 64

NOISE_THREATS = ("bit_error", "burst", "random_payload", "codeword_flip")
ATTACK_THREATS = ("forge", "replay", "splice", "brute_force")


class ConfigError(Exception):
    def __init__(self, message, path="config"):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Threat:
    kind: str
    rate: float = 0.0          # bit_error
    length: int = 0            # burst
    attempts: int = 0          # brute_force
    payload: bytes = b""       # forge

    @property
    def label(self) -> str:
        if self.kind == "bit_error":
            return f"bit_error({self.rate:g})"
        if self.kind == "burst":
            return f"burst({self.length})"
        if self.kind == "brute_force":
            return f"brute_force({self.attempts})"
        return self.kind


@dataclass
class CampaignConfig:
    schemes: list[str]
    threats: list[Threat]
    trials: int
    seed: int
    key_modulus: int = 251
    coded_signature: int = 7
    payload_length: int = DEFAULT_PAYLOAD_LENGTH
    mac_key_hex: str | None = None
    mac_truncation: int = 32


def parse_config(doc: dict) -> CampaignConfig:
    """Validate a campaign configuration document."""
    if not isinstance(doc, dict):
        raise ConfigError("document must be a JSON object")

    def require(name, types):
        if name not in doc:
            raise ConfigError("missing field", f"config.{name}")
        value = doc[name]
        if not isinstance(value, types):
            raise ConfigError(f"bad type {type(value).__name__}",
                              f"config.{name}")
        return value

    schemes = require("schemes", list)
    trials = require("trials", int)
    seed = require("seed", int)
    if trials < 1:
        raise ConfigError("must be >= 1", "config.trials")
    threats = []
    for i, entry in enumerate(require("threats", list)):
        path = f"config.threats[{i}]"
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigError("threat needs a 'kind'", path)
        kind = entry["kind"]
        if kind not in NOISE_THREATS + ATTACK_THREATS:
            raise ConfigError(f"unknown threat kind {kind!r}", path)
        threats.append(Threat(
            kind=kind,
            rate=float(entry.get("rate", 0.0)),
            length=int(entry.get("length", 0)),
            attempts=int(entry.get("attempts", 0)),
            payload=bytes.fromhex(entry.get("payload_hex", ""))))
    config = CampaignConfig(
        schemes=[str(s) for s in schemes],
        threats=threats,
        trials=trials,
        seed=seed,
        key_modulus=int(doc.get("key_a", 251)),
        coded_signature=int(doc.get("coded_signature", 7)),
        payload_length=int(doc.get("payload_length", DEFAULT_PAYLOAD_LENGTH)),
        mac_key_hex=doc.get("mac_key"),
        mac_truncation=int(doc.get("mac_truncation", 32)))
    for name in config.schemes:
        build_scheme(name, config)  # raises ConfigError on bad names
    if config.mac_truncation not in TAG_LENGTHS:
        raise ConfigError(f"must be one of {TAG_LENGTHS}",
                          "config.mac_truncation")
    return config


def load_config(path: str) -> CampaignConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}", path) from None
    return parse_config(doc)


def build_scheme(name: str, config: CampaignConfig) -> tg.ProtectionScheme:
    """Instantiate a protection scheme from its config name."""
    if name == tg.SCHEME_NONE:
        return tg.ProtectionScheme(tg.SCHEME_NONE)
    if name == tg.SCHEME_PARITY:
        return tg.ProtectionScheme(tg.SCHEME_PARITY)
    if name in CRC_CATALOG:
        return tg.ProtectionScheme(tg.SCHEME_CRC,
                                   crc_params=CRC_CATALOG[name])
    if name == tg.SCHEME_HAMMING:
        return tg.ProtectionScheme(tg.SCHEME_HAMMING)
    if name == tg.SCHEME_CODEDSIG:
        key = make_key(config.key_modulus)
        return tg.ProtectionScheme(
            tg.SCHEME_CODEDSIG, key=key,
            signature=config.coded_signature % key.modulus)
    if name.startswith("hmac"):
        t = config.mac_truncation
        if "-" in name:
            t = int(name.split("-", 1)[1])
        if t not in TAG_LENGTHS:
            raise ConfigError(f"hmac truncation must be one of {TAG_LENGTHS}",
                              f"config.schemes[{name}]")
        return tg.ProtectionScheme(tg.SCHEME_HMAC, mac_truncation=t)
    raise ConfigError(f"unknown scheme {name!r}", f"config.schemes[{name}]")


def resolve_mac_key(config: CampaignConfig) -> MacKey | None:
    """Env variable overrides the config key reference; never echoed."""
    env = os.environ.get(MAC_KEY_ENV)
    if env is not None:
        return MacKey.from_hex(env)
    if config.mac_key_hex is not None:
        return MacKey.from_hex(config.mac_key_hex)
    return None


@dataclass
class CellResult:
    scheme: str
    threat: str
    delivered: int = 0
    accepted: int = 0
    rejected: int = 0
    corrected: int = 0
    accepted_but_wrong: int = 0
    miscorrected: int = 0  # corrected to content the sender never emitted

    def rates(self) -> dict:
        n = self.delivered
        lo, hi = wilson_interval(self.accepted_but_wrong, n)
        return {
            "accepted": self.accepted / n,
            "rejected": self.rejected / n,
            "corrected": self.corrected / n,
            "accepted_but_wrong": self.accepted_but_wrong / n,
            "accepted_but_wrong_ci": [lo, hi],
        }


@dataclass
class ChannelReport:
    cells: list[CellResult]
    config_echo: dict
    seed: int

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "config": self.config_echo,
            "cells": [
                {"scheme": c.scheme, "threat": c.threat,
                 "delivered": c.delivered, "accepted": c.accepted,
                 "rejected": c.rejected, "corrected": c.corrected,
                 "accepted_but_wrong": c.accepted_but_wrong,
                 "miscorrected": c.miscorrected,
                 "rates": c.rates()}
                for c in self.cells
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["scheme", "threat", "delivered", "accepted",
                         "rejected", "corrected", "accepted_but_wrong",
                         "miscorrected"])
        for c in self.cells:
            writer.writerow([c.scheme, c.threat, c.delivered, c.accepted,
                             c.rejected, c.corrected, c.accepted_but_wrong,
                             c.miscorrected])
        return buf.getvalue()

    def cell(self, scheme: str, threat: str) -> CellResult:
        for c in self.cells:
            if c.scheme == scheme and c.threat == threat:
                return c
        raise KeyError((scheme, threat))


def _flip_tag_bits(wire: bytes, rng: random.Random) -> bytes:
    """One random bit flip per tag byte (per Hamming codeword)."""
    telegram, scheme_id, tag = tg.parse_wire(wire)
    flipped = bytes(b ^ (1 << rng.randrange(7)) for b in tag)
    return tg._reassemble(telegram, scheme_id, flipped)


def _replace_payload(wire: bytes, payload: bytes) -> bytes:
    telegram, scheme_id, tag = tg.parse_wire(wire)
    forged = tg.Telegram(telegram.seq, telegram.date, payload)
    return tg._reassemble(forged, scheme_id, tag)


def _run_cell(scheme_name: str, scheme: tg.ProtectionScheme, threat: Threat,
              config: CampaignConfig, mac_key: MacKey | None) -> CellResult:
    cell = CellResult(scheme=scheme_name, threat=threat.label)
    knowledge = tg.AttackerKnowledge(scheme)
    trials = threat.attempts if threat.kind == "brute_force" else config.trials

    for i in range(trials):
        rng = random.Random(f"vitalcode-channel:{config.seed}:"
                            f"{scheme_name}:{threat.label}:{i}")

        if threat.kind == "brute_force":
            # Tag guessing: the attacker fabricates frames for one chosen
            # message and tries a fresh random tag per attempt.  Nothing
            # the attacker presents was ever sent, so any acceptance is a
            # wrong acceptance.
            forged = threat.payload or b"\x00" * config.payload_length
            carrier = tg.Telegram(1, 1, forged)
            wire = tg.protect_telegram(carrier, scheme, mac_key)
            window = tg.ReceiverWindow(min_seq=0, current_date=1)
            original = None
            delivered = tg.apply_attack(
                wire, tg.AttackSpec(tg.BRUTE_FORCE_TAG, payload=forged),
                knowledge, rng)
            _tally(cell, tg.verify_telegram(delivered, scheme, mac_key,
                                            window), original, threat)
            continue

        seq = i + 1
        date = i + 1
        payload = rng.randbytes(config.payload_length)
        original = tg.Telegram(seq, date, payload)
        wire = tg.protect_telegram(original, scheme, mac_key)
        window = tg.ReceiverWindow(min_seq=seq - 1, current_date=date)

        if threat.kind == "bit_error":
            delivered = tg.apply_channel_noise(
                wire, tg.NoiseModel("bit_error", bit_error_rate=threat.rate),
                rng)
        elif threat.kind == "burst":
            delivered = tg.apply_channel_noise(
                wire, tg.NoiseModel("burst", burst_length=threat.length), rng)
        elif threat.kind == "random_payload":
            delivered = _replace_payload(
                wire, rng.randbytes(config.payload_length))
        elif threat.kind == "codeword_flip":
            delivered = _flip_tag_bits(wire, rng)
        elif threat.kind == "forge":
            forged = threat.payload or rng.randbytes(config.payload_length)
            delivered = tg.apply_attack(
                wire, tg.AttackSpec(tg.FORGE_PAYLOAD, payload=forged),
                knowledge, rng)
        elif threat.kind == "replay":
            # The genuine frame was already accepted; the receiver's
            # sequence window has moved past it.
            window = tg.ReceiverWindow(min_seq=seq, current_date=date)
            delivered = tg.apply_attack(wire, tg.AttackSpec(tg.REPLAY),
                                        knowledge, rng)
        else:  # splice
            donor = tg.Telegram(seq, date,
                                rng.randbytes(config.payload_length))
            donor_wire = tg.protect_telegram(donor, scheme, mac_key)
            delivered = tg.apply_attack(
                donor_wire, tg.AttackSpec(tg.SPLICE_SIGNATURE, donor=wire),
                knowledge, rng)

        _tally(cell, tg.verify_telegram(delivered, scheme, mac_key, window),
               original, threat)
    return cell


def _tally(cell: CellResult, result: tg.VerifyResult,
           original: tg.Telegram | None, threat: Threat) -> None:
    cell.delivered += 1
    if result.status == tg.REJECT:
        cell.rejected += 1
    elif result.status == tg.CORRECTED:
        cell.corrected += 1
        if original is None or result.telegram.payload != original.payload:
            cell.miscorrected += 1
    else:
        cell.accepted += 1
        # A replayed or tag-spliced frame is unauthorized even when its
        # content matches something the sender once emitted; a fabricated
        # brute-force frame (original None) was never sent at all.
        wrong = (original is None or result.telegram != original
                 or threat.kind in ("replay", "splice"))
        if wrong:
            cell.accepted_but_wrong += 1


def run_channel_campaign(config: CampaignConfig) -> ChannelReport:
    """Run the full schemes x threats grid; reproducible under its seed."""
    mac_key = resolve_mac_key(config)
    needs_key = any(name.startswith("hmac") for name in config.schemes)
    if needs_key and mac_key is None:
        raise ConfigError(f"hmac scheme configured but no MAC key in "
                          f"config.mac_key or ${MAC_KEY_ENV}",
                          "config.mac_key")
    cells = []
    for scheme_name in config.schemes:
        scheme = build_scheme(scheme_name, config)
        for threat in config.threats:
            cells.append(_run_cell(scheme_name, scheme, threat, config,
                                   mac_key))
    echo = {
        "schemes": config.schemes,
        "threats": [t.label for t in config.threats],
        "trials": config.trials,
        "key_a": config.key_modulus,
        "coded_signature": config.coded_signature,
        "payload_length": config.payload_length,
        "mac_truncation": config.mac_truncation,
        "mac_key": "<configured>" if mac_key is not None else None,
    }
    return ChannelReport(cells=cells, config_echo=echo, seed=config.seed)
