import numpy as np

from advurl.dataset import profile, synthesize_corpus, synthesize_fixtures, write_csv
from advurl.features.providers import ProviderSuite
from advurl.url_model import parse_url


def test_size_balance_and_parseable():
    d = synthesize_corpus(500, 3)
    assert len(d) == 1000 and d.class_counts() == {0: 500, 1: 500}
    for u in d.urls:
        parse_url(u)


def test_same_seed_same_bytes(tmp_path):
    write_csv(synthesize_corpus(200, 9), tmp_path / "a.csv")
    write_csv(synthesize_corpus(200, 9), tmp_path / "b.csv")
    write_csv(synthesize_corpus(200, 10), tmp_path / "c.csv")
    a, b, c = ((tmp_path / n).read_bytes() for n in ("a.csv", "b.csv", "c.csv"))
    assert a == b and a != c


def test_class_profiles_near_targets():
    rep = profile(synthesize_corpus(2000, 1))
    ben, mal = rep["classes"]["benign"], rep["classes"]["malicious"]
    assert abs(ben["mean_length"] - 44.28) <= 2.0
    assert abs(mal["mean_length"] - 63.14) <= 2.0
    assert abs(mal["mean_special_chars"] - 13.98) <= 1.0
    assert abs(mal["mean_path_length"] - 42.60) <= 2.0
    assert ben["ip_host_fraction"] == 0.0
    assert 0 < mal["ip_host_fraction"] <= 0.02


def test_fixtures_cover_every_row():
    d = synthesize_corpus(30, 2)
    stores = synthesize_fixtures(d, 2)
    suite = ProviderSuite.replay(stores)
    for u in d.urls:
        p = parse_url(u)
        if not p.is_ip_host:
            suite.search.search(p.registered_domain)
            suite.whois.lookup(p.registered_domain)
        suite.fetcher.fetch(u.strip())
    assert stores["registry"].default is False
