"""Shared fixtures: dev identities, profile builders, a nonce-tracking tx factory."""

from __future__ import annotations

import pytest

from medichain import fixtures
from medichain.keys import KeyPair, keygen
from medichain.state import WorldState, apply_tx, genesis_state
from medichain.tx import (
    GrantAccess,
    PatientProfile,
    Payload,
    ProviderProfile,
    Register,
    Role,
    SignedTransaction,
    make_tx,
)


@pytest.fixture(scope="session")
def dev_keys() -> list[KeyPair]:
    return [keygen(seed=seed) for seed in fixtures.DEV_SEEDS]


def patient_profile(name="Pat Lee", **overrides) -> PatientProfile:
    values = dict(
        name=name,
        phone="555-0100",
        email="pat@example.org",
        date_of_birth="1980-02-20",
        home_address="12 Elm Street",
        insurance_details="AXA policy 99-1234",
    )
    values.update(overrides)
    return PatientProfile(**values)


def provider_profile(name="Dr. Demo", **overrides) -> ProviderProfile:
    values = dict(
        name=name,
        phone="555-0200",
        email="dr@example.org",
        date_of_birth="1975-07-04",
        postal_address="1 Clinic Way",
        registration_number="GMC-7731",
        organization="St. Demo Hospital",
    )
    values.update(overrides)
    return ProviderProfile(**values)


class TxFactory:
    """Builds consecutively-nonced signed transactions per sender.

    For pre-building block batches; every built tx is assumed to apply.
    """

    def __init__(self):
        self.nonces: dict[bytes, int] = {}

    def build(self, kp: KeyPair, payload: Payload, timestamp: int = 0,
              nonce: int | None = None) -> SignedTransaction:
        if nonce is None:
            nonce = self.nonces.get(kp.address, 0)
            self.nonces[kp.address] = nonce + 1
        return make_tx(kp, nonce=nonce, timestamp=timestamp, payload=payload)


def tx_at(state: WorldState, kp: KeyPair, payload: Payload,
          timestamp: int = 0) -> SignedTransaction:
    """Signs with the nonce the state currently expects from this sender."""
    account = state.accounts.get(kp.address)
    nonce = account.nonce if account else 0
    return make_tx(kp, nonce=nonce, timestamp=timestamp, payload=payload)


def step(state: WorldState, kp: KeyPair, payload: Payload) -> WorldState:
    return apply_tx(state, tx_at(state, kp, payload))


@pytest.fixture
def txf() -> TxFactory:
    return TxFactory()


@pytest.fixture
def dev_state() -> WorldState:
    return genesis_state(fixtures.dev_allocations())


@pytest.fixture
def clinic(dev_keys, dev_state):
    """Dev state with accounts 0/1/2 registered patient/doctor/pharmacist
    and an active patient->doctor grant."""
    patient, doctor, pharmacist = dev_keys[0], dev_keys[1], dev_keys[2]
    state = dev_state
    state = step(state, patient,
                 Register(role=Role.PATIENT, profile=patient_profile()))
    state = step(state, doctor,
                 Register(role=Role.DOCTOR, profile=provider_profile()))
    state = step(state, pharmacist,
                 Register(role=Role.PHARMACIST,
                          profile=provider_profile(name="Pharm One")))
    state = step(state, patient, GrantAccess(grantee=doctor.address))
    return state, patient, doctor, pharmacist
