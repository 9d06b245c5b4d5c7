import pytest
from hypothesis import given, strategies as st

from advurl.errors import UnparsableUrl
from advurl.url_model import default_tld_table, effective_tld_split, is_ip_host, is_ipv4, load_tld_table, parse_url


def test_full_decomposition():
    u = parse_url("https://www.example.com/a?q=1#f")
    assert (u.scheme, u.subdomain, u.domain, u.tld) == ("https", "www", "example", "com")
    assert (u.path, u.query, u.fragment) == ("/a", "q=1", "f")
    assert not u.is_ip_host and u.port is None


def test_www_ip_host():
    u = parse_url("www.192.168.0.1")
    assert u.is_ip_host
    assert u.registered_domain == "192.168.0.1"


def test_host_only():
    u = parse_url("example.com")
    assert u.scheme is None and u.domain == "example" and u.tld == "com"
    assert u.path == "" and not u.query and not u.fragment


def test_port_and_userinfo():
    u = parse_url("http://user@Login.Example.ORG:8080/x")
    assert u.port == 8080 and u.userinfo == "user"
    assert u.host == "login.example.org" and u.subdomain == "login"


def test_bracketed_ipv6():
    assert parse_url("http://[::1]/x").is_ip_host


@pytest.mark.parametrize("raw", ["", "   ", "http:///path", "http://.../"])
def test_unparsable(raw):
    with pytest.raises(UnparsableUrl):
        parse_url(raw)


@pytest.mark.parametrize("host,expected", [
    ("www.bbc.co.uk", ("www", "bbc", "co.uk")),
    ("example.com", (None, "example", "com")),
    ("a.b.example.com", ("a.b", "example", "com")),
    ("intranet.localdomainzz", ("intranet", "localdomainzz", None)),
])
def test_effective_tld_split(host, expected):
    assert effective_tld_split(host) == expected


def test_longest_suffix_oracle():
    table = default_tld_table()
    for host in ["www.bbc.co.uk", "shop.example.com.au", "x.y.gov.uk", "news.example.de"]:
        labels = host.split(".")
        suffixes = [".".join(labels[i:]) for i in range(1, len(labels)) if ".".join(labels[i:]) in table]
        assert effective_tld_split(host)[2] == max(suffixes, key=len)


def test_tld_snapshot_skips_comments(tmp_path):
    p = tmp_path / "tld.txt"
    p.write_text("// header\ncom\n\nco.uk\n", encoding="utf-8")
    assert load_tld_table(p) == frozenset({"com", "co.uk"})


def test_ipv4_octet_range():
    assert is_ipv4("10.0.0.1") and is_ip_host("10.0.0.1")
    assert not is_ip_host("10.0.0.256")


def test_percent_encoded_host_is_decoded():
    assert parse_url("http://b%C3%BCcher.de/").host == "bücher.de"


label = st.text("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789", min_size=1, max_size=8)
tail = st.text("abcdefghijklmnopqrstuvwxyzABC0123456789-._~%=&;/", max_size=20)


@given(st.sampled_from(["http", "https", "HTTP", "ftp"]), st.lists(label, min_size=1, max_size=3),
       st.sampled_from(["com", "org", "co.uk"]), tail, st.none() | tail, st.none() | tail)
def test_round_trip(scheme, labels, tld, path, query, fragment):
    host = ".".join(labels) + "." + tld
    rest = "/" + path
    if query is not None:
        rest += "?" + query.replace("#", "")
    if fragment is not None:
        rest += "#" + fragment
    url = f"{scheme}://{host}{rest}"
    out = parse_url(url).serialize()
    head = f"{scheme}://{host}"
    assert out[: len(head)].lower() == head.lower()
    assert out[len(head):] == rest


printable = st.text(st.characters(min_codepoint=32, max_codepoint=126), max_size=20)


@given(printable, st.sampled_from([".", "://"]), printable)
def test_parse_is_total(left, sep, right):
    try:
        parse_url(left + sep + right)
    except UnparsableUrl:
        pass
