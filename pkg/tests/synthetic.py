"""Seeded synthetic corpora for classifier and flow tests.

Policy segments plant one distinctive trigger phrase per label (every
label owns at least one token no other label uses, checked at import);
flows plant PII-bearing query keys. Both add seeded filler/noise so the
learners see realistic clutter while staying (near-)separable.
"""

from __future__ import annotations

import random

from privaudit.classifier import AnnotatedSegment
from privaudit.dynamic_analysis import FlowRecord
from privaudit.labels import PII_LABELS

PII_TRIGGERS = {
    "Contact": "contact dossier",
    "Contact_Address_Book": "address book",
    "Contact_City": "home city",
    "Contact_E_Mail_Address": "email handle",
    "Contact_Password": "account password",
    "Contact_Phone_Number": "telephone number",
    "Contact_Postal_Address": "postal street",
    "Contact_ZIP": "zip postcode",
    "Demographic": "demographic traits",
    "Demographic_Age": "age bracket",
    "Demographic_Gender": "gender identity",
    "Identifier": "hardware fingerprint",
    "Identifier_Ad_ID": "advertising identifier",
    "Identifier_Cookie": "browser cookie",
    "Identifier_Device_ID": "device code",
    "Identifier_IMEI": "imei value",
    "Identifier_IMSI": "imsi subscriber",
    "Identifier_IP_Address": "internet protocol origin",
    "Identifier_MAC": "mac burned",
    "Identifier_Mobile_Carrier": "carrier operator",
    "Identifier_SIM_Serial": "sim serial",
    "Identifier_SSID_BSSID": "wifi ssid",
    "Location": "general whereabouts",
    "Location_Bluetooth": "bluetooth beacon",
    "Location_Cell_Tower": "cell tower",
    "Location_GPS": "gps satellites",
    "Location_IP_Address": "geolocated routing",
    "Location_WiFi": "hotspot triangulation",
}
PROCEDURE_TRIGGERS = {
    "Performed": "we capture and retain",
    "Not_Performed": "we never record",
}
PARTY_TRIGGERS = {
    "1stParty": "inside our infrastructure",
    "3rdParty": "through outside partner vendors",
}

FILLER_WORDS = (
    "this application provides features users enjoy while sessions run "
    "smoothly including support content updates documentation settings "
    "preferences quality improvements performance reliability feedback "
    "during normal operation about product experience community help"
).split()

_ALL_TRIGGERS = {**PII_TRIGGERS, **PROCEDURE_TRIGGERS, **PARTY_TRIGGERS}


def _trigger_tokens(label: str) -> set[str]:
    return set(_ALL_TRIGGERS[label].split())


def _check_separable() -> None:
    for label in _ALL_TRIGGERS:
        others = set()
        for other in _ALL_TRIGGERS:
            if other != label:
                others |= _trigger_tokens(other)
        unique = _trigger_tokens(label) - others - set(FILLER_WORDS)
        assert unique, f"label {label} has no unique trigger token"


_check_separable()


def _junk_word(rng: random.Random) -> str:
    return "".join(rng.choice("bcdfghjklmnpqrstvwxz") for _ in range(5))


def synthetic_policy_corpus(
    n: int, seed: int, noise: float = 0.10
) -> list[AnnotatedSegment]:
    """n annotated segments; ~25% negatives; `noise` junk-token rate."""
    rng = random.Random(seed)
    segments = []
    for _ in range(n):
        filler = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(6, 12))]
        filler = [w if rng.random() >= noise else _junk_word(rng) for w in filler]
        if rng.random() < 0.25:
            chunks = filler
            triples: frozenset = frozenset()
        else:
            piis = rng.sample(PII_LABELS, k=rng.choice([1, 1, 2]))
            procedures = rng.choices(
                [("Performed",), ("Not_Performed",), ("Performed", "Not_Performed")],
                weights=[0.6, 0.25, 0.15],
            )[0]
            parties = rng.choices(
                [("1stParty",), ("3rdParty",), ("1stParty", "3rdParty")],
                weights=[0.45, 0.35, 0.2],
            )[0]
            phrases = (
                [PII_TRIGGERS[p] for p in piis]
                + [PROCEDURE_TRIGGERS[p] for p in procedures]
                + [PARTY_TRIGGERS[p] for p in parties]
            )
            chunks = filler + phrases
            rng.shuffle(chunks)
            triples = frozenset(
                (pii, proc, party)
                for pii in piis
                for proc in procedures
                for party in parties
            )
        segments.append(AnnotatedSegment(" ".join(chunks), triples))
    return segments


def segment_text_for(piis, procedures, parties, filler: str = "") -> str:
    """Deterministic segment wording the synthetic suite classifies cleanly."""
    phrases = (
        [PII_TRIGGERS[p] for p in piis]
        + [PROCEDURE_TRIGGERS[p] for p in procedures]
        + [PARTY_TRIGGERS[p] for p in parties]
    )
    lead = filler or "this application provides features users enjoy during operation"
    return lead + " " + " ".join(phrases)


# --- flows ------------------------------------------------------------------

# Both classes draw from one host pool: trackers also serve benign
# config/asset traffic, so hostnames alone cannot separate.
FLOW_HOSTS = (
    "ads.tracknet-metrics.com",
    "collect.flurry.com",
    "beacon.admetrics.io",
    "sync.datavendor.net",
    "cdn.static-assets.com",
    "api.weatherdata.org",
    "img.contenthub.net",
)

_LEAK_KINDS = (
    ("imei", lambda p: f"imei={p.get('imei', '356938035643809')}"),
    ("android_id", lambda p: f"android_id={p.get('android_id', '9774d56d682e549c')}"),
    ("email", lambda p: f"email={p.get('email', 'user%40example.com')}"),
    ("mac", lambda p: f"mac={p.get('mac_addr', '02:00:af:4b:11:22')}"),
    ("location", lambda p: "lat=42.3601&lon=-71.0589"),
    ("sim", lambda p: f"sim_id={p.get('sim_id', '8944500212345678912')}"),
    ("adid", lambda p: f"advertiser_id={p.get('advertiser_id', '38400000-8cf0-11bd')}"),
)

# Paths are shared across classes so no single token separates; the
# classifier has to key on the PII-bearing parameters themselves.
_LEAK_PATHS = ("/collect?{pii}&session={n}", "/v1/sync?{pii}&build={n}", "/api/track?{pii}&channel=stable")
_CLEAN_PATHS = (
    "/v1/content?locale=en&build={n}&theme=dark",
    "/api/config?version={n}&channel=stable",
    "/assets/img_{n}.png?cache={n}",
    "/collect?event=screen_view&session={n}",
)


def synthetic_flows(
    n: int, seed: int, noise: float = 0.05, profile_values: dict | None = None
) -> list[FlowRecord]:
    """n annotated flows, roughly half leaking; ~2% benign decoys."""
    rng = random.Random(seed)
    values = profile_values or {}
    flows = []
    for i in range(n):
        leaking = rng.random() < 0.5
        if leaking:
            _, render = _LEAK_KINDS[rng.randrange(len(_LEAK_KINDS))]
            host = FLOW_HOSTS[rng.randrange(len(FLOW_HOSTS))]
            path = _LEAK_PATHS[rng.randrange(len(_LEAK_PATHS))]
            uri = path.format(pii=render(values), n=rng.randrange(10**6))
        else:
            host = FLOW_HOSTS[rng.randrange(len(FLOW_HOSTS))]
            path = _CLEAN_PATHS[rng.randrange(len(_CLEAN_PATHS))]
            uri = path.format(n=rng.randrange(10**6))
            if rng.random() < 0.02:
                uri += "&email=support%40app-help.example"  # decoy contact field
        if rng.random() < noise:
            uri += f"&{_junk_word(rng)}={_junk_word(rng)}"
        headers = [("Host", host), ("User-Agent", "app/1.0")]
        if rng.random() < 0.3:
            headers.append(("Referer", f"https://{host}/start"))
        flows.append(
            FlowRecord(
                app_id="com.example.app",
                version_code=1,
                timestamp=f"2016-06-01T00:00:{i % 60:02d}",
                dst_host=host,
                method="GET",
                uri=uri,
                headers=tuple(headers),
                post_body=b"",
                leak=leaking,
            )
        )
    return flows
