import pytest
from hypothesis import given
from hypothesis import strategies as st

from giftsim import (
    Multiset,
    State,
    Transaction,
    demand,
    footprint,
    is_admissible,
    supply,
)

small_multisets = st.dictionaries(st.integers(0, 5), st.integers(1, 4), max_size=5).map(Multiset)


def test_occurrence_counts_match_worked_example():
    m = Multiset([1, 1, 2, 5, 7, 4, 7, 7, 8])
    assert len(m) == 9
    assert [m[e] for e in (1, 2, 4, 5, 7, 8)] == [2, 1, 1, 1, 3, 1]
    assert m[3] == 0
    assert 3 not in m and 7 in m


def test_union_is_occurrence_additive():
    k = Multiset(["a", "a", "b"])
    l = Multiset(["b", "c"])
    assert k.union(l) == Multiset(["a", "a", "b", "b", "c"])
    assert k.union(Multiset()) == k
    assert Multiset().union(k) == k


def test_subset_examples():
    assert Multiset(["a"]).issubset(Multiset(["a", "a", "b"]))
    assert not Multiset(["a", "a", "a"]).issubset(Multiset(["a", "a"]))
    assert Multiset().issubset(Multiset(["x"]))
    assert Multiset().issubset(Multiset())


def test_multiset_rejects_bad_counts():
    with pytest.raises(ValueError):
        Multiset({"a": -1})
    with pytest.raises(ValueError):
        Multiset({"a": 1.5})
    assert Multiset({"a": 0}) == Multiset()


def test_multiset_is_hashable_and_order_insensitive():
    assert hash(Multiset(["a", "b", "a"])) == hash(Multiset(["b", "a", "a"]))
    assert Multiset(["a", "b"]) != Multiset(["a", "a", "b"])
    assert sorted(Multiset(["b", "a", "a"]).elements()) == ["a", "a", "b"]


@given(small_multisets, small_multisets)
def test_union_commutes(k, l):
    assert k.union(l) == l.union(k)


@given(small_multisets, small_multisets, small_multisets)
def test_union_associates(k, l, m):
    assert k.union(l).union(m) == k.union(l.union(m))


@given(small_multisets)
def test_subset_reflexive(k):
    assert k.issubset(k)


@given(small_multisets, small_multisets, small_multisets)
def test_subset_transitive(k, l, m):
    big = l.union(m)
    bigger = big.union(k)
    assert l.issubset(big) and big.issubset(bigger) and l.issubset(bigger)


def test_transaction_validation():
    txn = Transaction("P", "a", "Q")
    assert txn.supplier == "P" and txn.good == "a" and txn.recipient == "Q"
    with pytest.raises(ValueError):
        Transaction("P", "a", "P")
    with pytest.raises(ValueError):
        Transaction("", "a", "Q")
    with pytest.raises(ValueError):
        Transaction("P", "", "Q")


def test_transaction_ordering_is_supplier_good_recipient():
    txns = [Transaction("P", "b", "Q"), Transaction("P", "a", "R"), Transaction("O", "z", "Q")]
    assert sorted(txns) == [
        Transaction("O", "z", "Q"),
        Transaction("P", "a", "R"),
        Transaction("P", "b", "Q"),
    ]


def test_footprint_examples():
    txn = Transaction("P", "a", "Q")
    assert footprint(Multiset([txn])) == Multiset([supply("P", "a"), demand("Q", "a")])
    assert footprint(Multiset([txn, txn])) == Multiset(
        {supply("P", "a"): 2, demand("Q", "a"): 2}
    )
    assert footprint(Multiset()) == Multiset()


@given(
    st.lists(
        st.tuples(st.sampled_from("PQR"), st.sampled_from("ab"), st.sampled_from("QRS")),
        max_size=5,
    ),
    st.lists(
        st.tuples(st.sampled_from("PQR"), st.sampled_from("ab"), st.sampled_from("QRS")),
        max_size=5,
    ),
)
def test_footprint_is_additive(raw1, raw2):
    def build(raw):
        return Multiset([Transaction(s, g, r) for s, g, r in raw if s != r])

    t1, t2 = build(raw1), build(raw2)
    assert footprint(t1.union(t2)) == footprint(t1).union(footprint(t2))


def test_admissibility_examples():
    txn = Transaction("P", "a", "Q")
    full = State.of(supply("P", "a"), demand("Q", "a"))
    assert is_admissible(Multiset([txn]), full)
    assert not is_admissible(Multiset([txn]), State.of(supply("P", "a")))
    assert not is_admissible(Multiset({txn: 2}), full)
    assert is_admissible(Multiset(), State.of())


def _consumption_check(transactions, state):
    # independent oracle: consume offers one occurrence at a time
    remaining = dict(state.offers.items())
    for txn in transactions.elements():
        for offer in txn.offers:
            if remaining.get(offer, 0) < 1:
                return False
            remaining[offer] -= 1
    return True


@given(st.data())
def test_admissibility_agrees_with_consumption_oracle(data):
    entities = ["P", "Q", "R"]
    goods = ["a", "b"]
    offers = data.draw(
        st.lists(
            st.tuples(st.booleans(), st.sampled_from(entities), st.sampled_from(goods)),
            max_size=6,
        )
    )
    state = State(
        Multiset([supply(e, g) if is_sup else demand(e, g) for is_sup, e, g in offers])
    )
    raw = data.draw(
        st.lists(
            st.tuples(st.sampled_from(entities), st.sampled_from(goods), st.sampled_from(entities)),
            max_size=4,
        )
    )
    transactions = Multiset([Transaction(s, g, r) for s, g, r in raw if s != r])
    assert is_admissible(transactions, state) == _consumption_check(transactions, state)


def test_state_of_counts_duplicates():
    state = State.of(supply("P", "a"), supply("P", "a"), demand("Q", "a"))
    assert state.offers[supply("P", "a")] == 2
    assert state.offers[demand("Q", "a")] == 1
