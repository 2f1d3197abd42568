#!/usr/bin/env python3
# Writes adblock_vectors.json and cross-checks every vector against
# adblockparser (pip install adblockparser), which follows the Adblock Plus
# semantics the matcher implements. Differences from the Brave `adblock`
# engine, when installed, are listed for information. Run from this directory.

import json
import sys

from adblockparser import AdblockRules

try:
    import adblock
except ImportError:
    adblock = None

V = []


def vec(name, rules, url, match, page_host=None):
    v = {"name": name, "rules": rules, "url": url, "match": match}
    if page_host:
        v["page_host"] = page_host
    V.append(v)


# Domain anchors.
vec("anchor-exact-host", ["||tracker.example^"], "https://tracker.example/fp.js", True)
vec("anchor-subdomain", ["||tracker.example^"], "https://cdn.tracker.example/fp.js", True)
vec("anchor-deep-subdomain", ["||tracker.example^"], "https://a.b.tracker.example/x", True)
vec("anchor-label-boundary", ["||tracker.example^"], "https://nottracker.example/fp.js", False)
vec("anchor-suffix-is-not-host", ["||tracker.example^"], "https://tracker.example.org/fp.js", False)
vec("anchor-in-path-ignored", ["||tracker.example^"], "https://site.example/tracker.example/x.js", False)
vec("anchor-with-port", ["||tracker.example^"], "https://tracker.example:8443/fp.js", True)
vec("anchor-no-path", ["||tracker.example^"], "https://tracker.example", True)
vec("anchor-with-path", ["||cdn.example/fp/"], "https://cdn.example/fp/v2.js", True)
vec("anchor-with-path-miss", ["||cdn.example/fp/"], "https://cdn.example/lib/fp.js", False)
vec("anchor-case-insensitive", ["||Tracker.Example/FP"], "https://tracker.example/fp.js", True)
vec("anchor-with-http", ["||tracker.example^"], "http://tracker.example/a", True)
vec("anchor-no-separator", ["||tracker.ex"], "https://tracker.example/a", True)
vec("anchor-query-string", ["||metrics.example^*collect"], "https://metrics.example/v1?collect=1", True)

# Separators.
vec("sep-slash", ["/fp^"], "https://a.example/fp/x.js", True)
vec("sep-query", ["/fp.js^"], "https://a.example/fp.js?v=2", True)
vec("sep-end", ["/fp.js^"], "https://a.example/fp.js", True)
vec("sep-dot-is-not", ["/fp^"], "https://a.example/fp.js", False)
vec("sep-dash-is-not", ["/fp^"], "https://a.example/fp-2.js", False)
vec("sep-underscore-is-not", ["/fp^"], "https://a.example/fp_2.js", False)
vec("sep-percent-is-not", ["/fp^"], "https://a.example/fp%20x", False)
vec("sep-equals", ["?id^"], "https://a.example/p?id=3", True)
vec("sep-ampersand", ["&fpid^"], "https://a.example/p?a=1&fpid&b", True)

# Wildcards and substrings.
vec("substring", ["fingerprint2"], "https://cdn.example/libs/fingerprint2.min.js", True)
vec("substring-miss", ["fingerprint3"], "https://cdn.example/libs/fingerprint2.min.js", False)
vec("wildcard-middle", ["/fp/*/collect"], "https://a.example/fp/v2/collect", True)
vec("wildcard-empty-span", ["/fp/*collect"], "https://a.example/fp/collect", True)
vec("wildcard-miss", ["/fp/*/collect"], "https://a.example/fp/collect", False)
vec("wildcard-leading", ["*/beacon.js"], "https://x.example/js/beacon.js", True)
vec("wildcard-trailing", ["/beacon*"], "https://x.example/beacon", True)
vec("wildcard-with-anchor", ["||stats.example/*.js"], "https://stats.example/a/b.js", True)
vec("wildcard-with-anchor-miss", ["||stats.example/*.js"], "https://stats.example/a/b.css", False)

# Start / end anchors.
vec("start-anchor", ["|https://evil.example/"], "https://evil.example/x.js", True)
vec("start-anchor-miss", ["|https://evil.example/"], "http://evil.example/x.js", False)
vec("start-anchor-mid-url", ["|evil.example"], "https://evil.example/x.js", False)
vec("end-anchor", ["fp.js|"], "https://a.example/fp.js", True)
vec("end-anchor-miss", ["fp.js|"], "https://a.example/fp.js?x=1", False)
vec("both-anchors", ["|https://a.example/fp.js|"], "https://a.example/fp.js", True)
vec("both-anchors-miss", ["|https://a.example/fp.js|"], "https://a.example/fp.jsx", False)

# Exceptions.
vec("exception-wins", ["||cdn.example^", "@@||cdn.example^"], "https://cdn.example/a.js", False)
vec("exception-other-host", ["||cdn.example^", "@@||other.example^"], "https://cdn.example/a.js", True)
vec("exception-narrow-path", ["||cdn.example^", "@@||cdn.example/ok/"], "https://cdn.example/ok/a.js", False)
vec("exception-narrow-path-miss", ["||cdn.example^", "@@||cdn.example/ok/"], "https://cdn.example/bad/a.js", True)
vec("exception-only", ["@@||cdn.example^"], "https://cdn.example/a.js", False)

# Options.
vec("option-script", ["||tracker.example^$script"], "https://tracker.example/fp.js", True)
vec("option-not-script", ["||tracker.example^$~script"], "https://tracker.example/fp.js", False)
vec("option-domain-include", ["||tracker.example^$domain=news.example"], "https://tracker.example/fp.js", True,
    page_host="www.news.example")
vec("option-domain-include-miss", ["||tracker.example^$domain=news.example"], "https://tracker.example/fp.js",
    False, page_host="shop.example")
vec("option-domain-exclude", ["||tracker.example^$domain=~news.example"], "https://tracker.example/fp.js", False,
    page_host="news.example")
vec("option-domain-exclude-other", ["||tracker.example^$domain=~news.example"], "https://tracker.example/fp.js",
    True, page_host="shop.example")

# Lines that never become rules.
vec("comment-line", ["! ||tracker.example^"], "https://tracker.example/fp.js", False)
vec("cosmetic-line", ["tracker.example##.ad"], "https://tracker.example/fp.js", False)


def reference_match(v):
    rules = AdblockRules(v["rules"])
    options = {"script": True}
    if "page_host" in v:
        options["domain"] = v["page_host"]
    return rules.should_block(v["url"], options)


def brave_match(v):
    fs = adblock.FilterSet()
    fs.add_filter_list("\n".join(v["rules"]))
    engine = adblock.Engine(fs)
    source = "https://" + v.get("page_host", "page.example") + "/"
    return engine.check_network_urls(v["url"], source, "script").matched


def main():
    disagreements = [v["name"] for v in V if reference_match(v) != v["match"]]
    if adblock is not None:
        brave = [v["name"] for v in V if brave_match(v) != v["match"]]
        if brave:
            print("brave engine differs on:", ", ".join(brave))
    if disagreements:
        print("reference engine disagrees on:", ", ".join(disagreements))
        return 1
    with open("adblock_vectors.json", "w") as f:
        json.dump(V, f, indent=2)
        f.write("\n")
    print(f"{len(V)} vectors written, all agree with the reference engine")
    return 0


if __name__ == "__main__":
    sys.exit(main())
