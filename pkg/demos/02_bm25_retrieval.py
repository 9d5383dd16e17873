#!/usr/bin/env python3
"""Build an inverted index over expanded item documents and search it.

Shows the expansion effect directly: a conversational query misses on
metadata alone but hits once past conversations are concatenated into the
document, and a brand-new item becomes retrievable through an incremental
add with no rebuild.
"""

from convrec.bm25 import BM25Params, build
from convrec.corpus import Item, ItemMetadata
from convrec.docbuilder import FULL, METADATA_ONLY, make_document
from convrec.textnorm import tokenize

CATALOG = {
    "1": (Item("1", "Night Harbor (1998)"),
          ItemMetadata("1", plot="a detective hunts a smuggler", actors=("Ada Lin",))),
    "2": (Item("2", "Paper Canyon (2004)"),
          ItemMetadata("2", plot="two friends hike a desert canyon", actors=("Bo Reyes",))),
    "3": (Item("3", "Electric Meadow (2011)"),
          ItemMetadata("3", plot="a band reunites for one last show", actors=("Cy Moss",))),
}

# past conversations that recommended item 2, masked like training queries
CONTEXTS_FOR_2 = [
    "i want something relaxing about hiking . you could try [REC]",
    "any road trip movies . [REC] is a calm one about friends walking",
]

QUERY = "i want a calm movie about friends walking somewhere [REC]"


def show(title, ranked, catalog):
    print(title)
    for rank, (ref, score) in enumerate(ranked, start=1):
        print(f"  {rank}. {catalog[ref][0].title:<24} score={score:.4f}")
    print()


def main():
    params = BM25Params()  # k1=1.6, b=0.7
    print(f"params: k1={params.k1} b={params.b} idf={params.idf_variant}\n")

    plain_docs = [
        (i, make_document(item, meta, [], METADATA_ONLY).tokens)
        for i, (item, meta) in CATALOG.items()
    ]
    plain = build(plain_docs, params)
    show("metadata only (no expansion):", plain.search(tokenize(QUERY), 3), CATALOG)

    expanded_docs = [
        (i, make_document(item, meta, CONTEXTS_FOR_2 if i == "2" else [], FULL).tokens)
        for i, (item, meta) in CATALOG.items()
    ]
    expanded = build(expanded_docs, params)
    show("with conversation expansion:", expanded.search(tokenize(QUERY), 3), CATALOG)

    new_item = Item("4", "Velvet Compass (2024)")
    new_meta = ItemMetadata("4", plot="sailors navigate by the stars")
    CATALOG["4"] = (new_item, new_meta)
    expanded.add_document("4", make_document(new_item, new_meta, [], FULL).tokens)
    show(
        "after an incremental add (no rebuild), querying 'sailors stars':",
        expanded.search(tokenize("sailors and the stars"), 2),
        CATALOG,
    )


if __name__ == "__main__":
    main()
