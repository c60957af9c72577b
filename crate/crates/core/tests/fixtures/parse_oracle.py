"""Writes page20.golden.json from page20.htm using Python's html.parser.

The fixture is well-formed (every element explicitly opened and closed, no
implied elements), so a plain tokenizer-driven tree agrees with HTML5 tree
construction. Run from this directory: python3 parse_oracle.py
"""

import json
from html.parser import HTMLParser

VOID = {"meta", "br", "img", "input", "link", "hr"}
HIDDEN = {"script", "style", "noscript", "template"}


class Oracle(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.nodes = []
        self.stack = []
        self.pieces = {}

    def handle_starttag(self, tag, attrs):
        nid = len(self.nodes)
        parent = self.stack[-1] if self.stack else None
        self.nodes.append({"tag": tag, "parent": parent, "children": []})
        self.pieces[nid] = []
        if parent is not None:
            self.nodes[parent]["children"].append(nid)
        if tag not in VOID:
            self.stack.append(nid)

    def handle_endtag(self, tag):
        if tag in VOID:
            return
        assert self.nodes[self.stack[-1]]["tag"] == tag, tag
        self.stack.pop()

    def handle_data(self, data):
        if self.stack:
            self.pieces[self.stack[-1]].append(data)


p = Oracle()
with open("page20.htm", encoding="utf-8") as f:
    p.feed(f.read())
p.close()
for nid, node in enumerate(p.nodes):
    text = "" if node["tag"] in HIDDEN else " ".join(" ".join(p.pieces[nid]).split())
    node["text"] = text
with open("page20.golden.json", "w", encoding="utf-8") as f:
    json.dump({"node_count": len(p.nodes), "nodes": p.nodes}, f, indent=1)
    f.write("\n")
print(len(p.nodes), "nodes")
