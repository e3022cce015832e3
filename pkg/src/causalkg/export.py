"""DOT, GraphML and edge-list CSV writers for concept graphs."""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET

from .graph import ConceptGraph


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: ConceptGraph) -> str:
    """Directed DOT; the root is drawn as a filled double octagon."""
    lines = ["digraph concept_graph {", "  rankdir=LR;", "  node [shape=box];"]
    for name in sorted(graph.nodes):
        if name == graph.root:
            lines.append(f"  {_dot_quote(name)} [shape=doubleoctagon, style=filled, fillcolor=gold];")
        else:
            lines.append(f"  {_dot_quote(name)};")
    for e in sorted(graph.edges, key=lambda e: (e.src, e.dst)):
        style = "" if e.provenance == "expansion" else " [style=dashed]"
        lines.append(f"  {_dot_quote(e.src)} -> {_dot_quote(e.dst)}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_graphml(graph: ConceptGraph) -> str:
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", xmlns=ns)
    ET.SubElement(root, "key", id="is_root", **{"for": "node", "attr.name": "is_root", "attr.type": "boolean"})
    ET.SubElement(root, "key", id="provenance", **{"for": "edge", "attr.name": "provenance", "attr.type": "string"})
    g = ET.SubElement(root, "graph", id="G", edgedefault="directed")
    for name in sorted(graph.nodes):
        n = ET.SubElement(g, "node", id=name)
        ET.SubElement(n, "data", key="is_root").text = "true" if name == graph.root else "false"
    for i, e in enumerate(sorted(graph.edges, key=lambda e: (e.src, e.dst))):
        el = ET.SubElement(g, "edge", id=f"e{i}", source=e.src, target=e.dst)
        ET.SubElement(el, "data", key="provenance").text = e.provenance
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def to_edge_csv(graph: ConceptGraph) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["src", "dst", "provenance"])
    for e in sorted(graph.edges, key=lambda e: (e.src, e.dst)):
        w.writerow([e.src, e.dst, e.provenance])
    return buf.getvalue()


EXPORTERS = {"dot": to_dot, "graphml": to_graphml, "csv": to_edge_csv}
