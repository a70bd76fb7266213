"""Cyclic execution of a coded program with end-of-cycle checks,
plus the accidental-fault injection engine and campaign runner.

A cycle encodes the inputs and constants at the current date (a trusted
boundary), runs every instruction through the coded elementary
operations, and finally checks each declared output against its PROM
signature and the date.  Any failed check suppresses output publication
for the cycle (fail-safe contract).

Fault models (one mutation per trial):

  F1  flip one bit of a variable's functional field, right after the
      variable is defined
  F2  flip one bit of a variable's code field, right after definition
  F3  operand substitution: at cycle end an output's coded value is
      replaced by another variable's current coded value
  F4  stale data: at cycle end an output's code field is replaced by the
      re-encoding of its value at an earlier date
  F5  corrupt one compensation constant of one instruction before the
      cycle runs
  F6  replace both fields of one output with uniform random values at
      cycle end
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .coded_core import (CodeKey, CodedValue, CompensationConstant,
                         FunctionalOverflow, MULTIPLICATIVE, check, encode,
                         opel_add, opel_mul, opel_sub, opel_move)
from .dsl import ADD, MOVE, MUL, SUB, ProgramIR, interpret
from .sigtool import CodedProgram, InstructionConstants, SignatureTable
from .stats import wilson_interval

ACCEPT = "accept"
REJECT = "reject"
SAFE_HALT = "safe_halt"

F1 = "F1"
F2 = "F2"
F3 = "F3"
F4 = "F4"
F5 = "F5"
F6 = "F6"

FAULT_MODELS = (F1, F2, F3, F4, F5, F6)

FUNCTIONAL_BITS = 64


class CodedRuntimeError(Exception):
    pass


class UnresolvableTarget(CodedRuntimeError):
    """Fault spec names a variable or instruction the program lacks."""


@dataclass
class FaultSpec:
    """One accidental fault to inject into one cycle.

    Unset selectors are resolved uniformly at random by the engine:
    F1/F2 pick any variable (and bit), F3/F4/F6 pick a declared output,
    F5 picks an instruction.  `bit` addresses the functional field's
    two's-complement word for F1 and the code residue for F2.
    """

    model: str
    variable: str | None = None
    donor: str | None = None        # F3 replacement source
    instruction: int | None = None  # F5 target
    bit: int | None = None          # F1 / F2
    staleness: int = 1              # F4: cycles of age


@dataclass
class CycleState:
    """Live coded values of one cycle, keyed by variable name."""

    values: dict[str, CodedValue]
    cycle: int


@dataclass
class CycleResult:
    verdict: str
    outputs: dict[str, int] | None  # published only on accept
    reject_reason: str | None = None


def _constants_at_date(const: InstructionConstants, date_term: int,
                       a: int):
    """Fold the cycle-date term into an instruction's stored constants."""
    if const.opcode == ADD:
        return CompensationConstant((const.kappa_sig - date_term) % a)
    if const.opcode == SUB:
        return CompensationConstant((const.kappa_sig + date_term) % a)
    if const.opcode == MOVE:
        return CompensationConstant(const.kappa_sig % a)
    t1 = (const.src1_sig + date_term) % a
    t2 = (const.src2_sig + date_term) % a
    km = (const.dest_sig + date_term - t1 * t2) % a
    return t1, t2, CompensationConstant(km, MULTIPLICATIVE)


def _flip_functional_bit(v: CodedValue, bit: int) -> CodedValue:
    word = v.x & ((1 << FUNCTIONAL_BITS) - 1)
    word ^= 1 << bit
    if word >= 1 << (FUNCTIONAL_BITS - 1):
        word -= 1 << FUNCTIONAL_BITS
    return CodedValue(word, v.c)


def inject_fault(state: CycleState, program: CodedProgram,
                 table: SignatureTable, key: CodeKey, spec: FaultSpec,
                 rng: random.Random) -> list[InstructionConstants]:
    """Apply one state-level fault (F1-F4, F6) to `state` in place.

    Returns the constants list to execute with: unchanged except for F5,
    where one instruction's constant is replaced by a different uniform
    residue.  Raises UnresolvableTarget for selectors the program cannot
    satisfy.
    """
    a = key.modulus
    constants = list(program.constants)

    def pick_variable(candidates):
        if spec.variable is not None:
            if spec.variable not in state.values:
                raise UnresolvableTarget(f"no variable {spec.variable!r}")
            return spec.variable
        if not candidates:
            raise UnresolvableTarget("no candidate variable")
        return candidates[rng.randrange(len(candidates))]

    if spec.model in (F1, F2):
        name = pick_variable(sorted(state.values))
        v = state.values[name]
        if spec.model == F1:
            bit = spec.bit if spec.bit is not None \
                else rng.randrange(FUNCTIONAL_BITS)
            state.values[name] = _flip_functional_bit(v, bit)
        else:
            bit = spec.bit if spec.bit is not None \
                else rng.randrange(key.bit_width)
            state.values[name] = CodedValue(v.x, v.c ^ (1 << bit))
    elif spec.model == F3:
        outputs = [o for o in program.ir.outputs if o in state.values]
        name = pick_variable(outputs)
        if spec.donor is not None:
            donor = spec.donor
            if donor not in state.values:
                raise UnresolvableTarget(f"no donor {donor!r}")
        else:
            others = sorted(n for n in state.values if n != name)
            if not others:
                raise UnresolvableTarget("no donor variable available")
            donor = others[rng.randrange(len(others))]
        state.values[name] = state.values[donor]
    elif spec.model == F4:
        outputs = [o for o in program.ir.outputs if o in state.values]
        name = pick_variable(outputs)
        v = state.values[name]
        stale_term = (state.cycle - spec.staleness) % a
        state.values[name] = CodedValue(
            v.x, (v.x + table.signatures[name] + stale_term) % a)
    elif spec.model == F5:
        if not constants:
            raise UnresolvableTarget("program has no instructions")
        idx = spec.instruction if spec.instruction is not None \
            else rng.randrange(len(constants))
        if not (0 <= idx < len(constants)):
            raise UnresolvableTarget(f"no instruction {idx}")
        old = constants[idx]
        if old.opcode == MUL:
            fields = ("src1_sig", "src2_sig", "dest_sig")
            which = fields[rng.randrange(3)]
            current = getattr(old, which)
            replaced = dict(src1_sig=old.src1_sig, src2_sig=old.src2_sig,
                            dest_sig=old.dest_sig)
            replaced[which] = (current + rng.randrange(1, a)) % a
            constants[idx] = InstructionConstants(MUL, **replaced)
        else:
            constants[idx] = InstructionConstants(
                old.opcode,
                kappa_sig=(old.kappa_sig + rng.randrange(1, a)) % a)
    elif spec.model == F6:
        outputs = [o for o in program.ir.outputs if o in state.values]
        name = pick_variable(outputs)
        x = rng.getrandbits(FUNCTIONAL_BITS) - (1 << (FUNCTIONAL_BITS - 1))
        state.values[name] = CodedValue(x, rng.randrange(a))
    else:
        raise UnresolvableTarget(f"unknown fault model {spec.model!r}")
    return constants


def run_cycle(program: CodedProgram, table: SignatureTable,
              inputs: dict[str, int], cycle: int, key: CodeKey,
              fault: FaultSpec | None = None,
              rng: random.Random | None = None,
              check_intermediates: bool = False) -> CycleResult:
    """Execute one cycle; publish outputs only if every check accepts.

    With a fault spec, exactly one mutation is applied at the model's
    injection point (F5 before execution, F1/F2 after the target's
    definition, F3/F4/F6 at cycle end before the checks).
    """
    a = key.modulus
    ir = program.ir
    sigs = table.signatures
    date_term = cycle % a
    state = CycleState(values={}, cycle=cycle)

    mid_cycle = fault is not None and fault.model in (F1, F2)
    end_cycle = fault is not None and fault.model in (F3, F4, F6)
    constants = list(program.constants)
    if fault is not None and fault.model == F5:
        constants = inject_fault(state, program, table, key, fault, rng)

    # Mid-cycle faults strike right after the target variable's
    # definition; resolve the target before execution starts.
    mid_target = None
    if mid_cycle:
        if fault.variable is not None:
            if fault.variable not in ir.variables():
                raise UnresolvableTarget(f"no variable {fault.variable!r}")
            mid_target = fault.variable
        else:
            names = ir.variables()
            mid_target = names[rng.randrange(len(names))]

    def strike(name):
        if mid_cycle and name == mid_target:
            inject_fault(state, program, table, key,
                         FaultSpec(fault.model, variable=name,
                                   bit=fault.bit),
                         rng)

    for name in ir.inputs:
        if name not in inputs:
            raise KeyError(f"missing input {name!r}")
        state.values[name] = encode(int(inputs[name]), sigs[name],
                                    cycle, key)
        strike(name)
    for name, value in ir.consts.items():
        state.values[name] = encode(value, sigs[name], cycle, key)
        strike(name)

    try:
        for ins, const in zip(ir.instructions, constants):
            folded = _constants_at_date(const, date_term, a)
            v1 = state.values[ins.src1]
            if ins.opcode == ADD:
                result = opel_add(v1, state.values[ins.src2], folded, key)
            elif ins.opcode == SUB:
                result = opel_sub(v1, state.values[ins.src2], folded, key)
            elif ins.opcode == MUL:
                t1, t2, km = folded
                result = opel_mul(v1, state.values[ins.src2], t1, t2, km, key)
            else:
                result = opel_move(v1, folded, key)
            state.values[ins.dest] = result
            strike(ins.dest)
            if check_intermediates and not check(result, sigs[ins.dest],
                                                 cycle, key):
                return CycleResult(REJECT, None,
                                   f"intermediate {ins.dest!r} incoherent")
    except FunctionalOverflow as exc:
        return CycleResult(SAFE_HALT, None, str(exc))

    if end_cycle:
        inject_fault(state, program, table, key, fault, rng)

    for name in ir.outputs:
        if not check(state.values[name], sigs[name], cycle, key):
            return CycleResult(REJECT, None, f"output {name!r} incoherent")
    outputs = {name: state.values[name].x for name in ir.outputs}
    return CycleResult(ACCEPT, outputs)


@dataclass
class ModelCounts:
    trials: int = 0
    detected: int = 0
    undetected_wrong_output: int = 0
    benign: int = 0


@dataclass
class InjectionReport:
    """Aggregated outcome of a fault-injection campaign."""

    trials: int
    detected: int
    undetected_wrong_output: int
    benign: int
    false_alarms: int
    per_model: dict[str, ModelCounts]
    seed: int
    key_modulus: int
    undetected_rate: float
    undetected_ci: tuple[float, float]

    def to_json(self) -> str:
        doc = {
            "trials": self.trials,
            "detected": self.detected,
            "undetected_wrong_output": self.undetected_wrong_output,
            "benign": self.benign,
            "false_alarms": self.false_alarms,
            "seed": self.seed,
            "key_modulus": self.key_modulus,
            "undetected_rate": self.undetected_rate,
            "undetected_ci": list(self.undetected_ci),
            "per_model": {
                m: {"trials": c.trials, "detected": c.detected,
                    "undetected_wrong_output": c.undetected_wrong_output,
                    "benign": c.benign}
                for m, c in sorted(self.per_model.items())
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def default_input_generator(ir: ProgramIR):
    """Uniform small inputs, safe from 64-bit overflow in short programs."""
    def gen(rng: random.Random) -> dict[str, int]:
        return {name: rng.randrange(-100, 101) for name in ir.inputs}
    return gen


def trial_rng(seed: int, trial: int) -> random.Random:
    # String seeding hashes deterministically across runs and processes.
    return random.Random(f"vitalcode:{seed}:{trial}")


def run_campaign(program: CodedProgram, table: SignatureTable, key: CodeKey,
                 models, trials: int, seed: int,
                 input_generator=None) -> InjectionReport:
    """Inject `trials` single faults drawn uniformly from `models`.

    Fully reproducible: every trial derives its own generator from
    (seed, trial index), so results are independent of execution order.
    An empty model list runs a fault-free baseline; any rejection there
    counts as a false alarm.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    models = list(models)
    if input_generator is None:
        input_generator = default_input_generator(program.ir)

    detected = undetected = benign = false_alarms = 0
    per_model: dict[str, ModelCounts] = {m: ModelCounts() for m in models}

    for i in range(trials):
        rng = trial_rng(seed, i)
        inputs = input_generator(rng)
        cycle = rng.randrange(1, 1 << 20)
        if models:
            model = models[rng.randrange(len(models))]
            spec = FaultSpec(model)
        else:
            model, spec = None, None
        result = run_cycle(program, table, inputs, cycle, key,
                           fault=spec, rng=rng)
        reference = interpret(program.ir, inputs)
        if result.verdict != ACCEPT:
            detected += 1
            outcome = "detected"
            if model is None:
                false_alarms += 1
        elif result.outputs != reference:
            undetected += 1
            outcome = "undetected"
        else:
            benign += 1
            outcome = "benign"
        if model is not None:
            counts = per_model[model]
            counts.trials += 1
            if outcome == "detected":
                counts.detected += 1
            elif outcome == "undetected":
                counts.undetected_wrong_output += 1
            else:
                counts.benign += 1

    rate = undetected / trials
    return InjectionReport(
        trials=trials, detected=detected,
        undetected_wrong_output=undetected, benign=benign,
        false_alarms=false_alarms, per_model=per_model, seed=seed,
        key_modulus=key.modulus, undetected_rate=rate,
        undetected_ci=wilson_interval(undetected, trials))
