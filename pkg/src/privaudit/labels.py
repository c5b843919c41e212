"""Canonical label sets shared across the toolkit.

Policy classifiers, static leak records, and the compliance engine all
speak the same 28 PII type names. Network-flow extraction uses its own
smaller label set, converted via the mapping table in `compliance`.
"""

from __future__ import annotations

from typing import NamedTuple

# The 28 PII practice types, in canonical order. Serialized names are
# exactly these strings; do not rename.
PII_LABELS: tuple[str, ...] = (
    "Contact",
    "Contact_Address_Book",
    "Contact_City",
    "Contact_E_Mail_Address",
    "Contact_Password",
    "Contact_Phone_Number",
    "Contact_Postal_Address",
    "Contact_ZIP",
    "Demographic",
    "Demographic_Age",
    "Demographic_Gender",
    "Identifier",
    "Identifier_Ad_ID",
    "Identifier_Cookie",
    "Identifier_Device_ID",
    "Identifier_IMEI",
    "Identifier_IMSI",
    "Identifier_IP_Address",
    "Identifier_MAC",
    "Identifier_Mobile_Carrier",
    "Identifier_SIM_Serial",
    "Identifier_SSID_BSSID",
    "Location",
    "Location_Bluetooth",
    "Location_Cell_Tower",
    "Location_GPS",
    "Location_IP_Address",
    "Location_WiFi",
)
PII_LABEL_SET = frozenset(PII_LABELS)

# Binary classifier names for the procedure and party tiers.
PROCEDURE_CLASSIFIERS: tuple[str, ...] = ("Performed", "Not_Performed")
PARTY_CLASSIFIERS: tuple[str, ...] = ("1stParty", "3rdParty")

# The full 32-model suite: 28 PII + 2 procedure + 2 party.
CLASSIFIER_LABELS: tuple[str, ...] = PII_LABELS + PROCEDURE_CLASSIFIERS + PARTY_CLASSIFIERS
CLASSIFIER_LABEL_SET = frozenset(CLASSIFIER_LABELS)

# Enumerated values used by derived disclosures and leak records.
PERFORMED = "Performed"
NOT_PERFORMED = "NotPerformed"
PROCEDURES: tuple[str, ...] = (PERFORMED, NOT_PERFORMED)

FIRST_PARTY = "FirstParty"
THIRD_PARTY = "ThirdParty"
PARTIES: tuple[str, ...] = (FIRST_PARTY, THIRD_PARTY)

# Annotation-tier party names map onto the leak-record party names.
PARTY_FROM_CLASSIFIER = {"1stParty": FIRST_PARTY, "3rdParty": THIRD_PARTY}
CLASSIFIER_FROM_PARTY = {v: k for k, v in PARTY_FROM_CLASSIFIER.items()}

# Labels produced by network-flow extraction, exactly as serialized.
DYNAMIC_LABELS: tuple[str, ...] = (
    "firstName",
    "lastName",
    "email",
    "password",
    "phone_number",
    "gender",
    "hardware_serial",
    "gsf_id",
    "advertiser_id",
    "android_id",
    "imei",
    "sim_id",
    "mac_addr",
    "location",
)
DYNAMIC_LABEL_SET = frozenset(DYNAMIC_LABELS)


class PracticeDisclosure(NamedTuple):
    """One disclosed practice: what is collected, whether, and by whom."""

    pii: str        # one of PII_LABELS
    procedure: str  # PERFORMED | NOT_PERFORMED
    party: str      # FIRST_PARTY | THIRD_PARTY
