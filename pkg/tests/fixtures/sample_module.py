"""Inventory helpers used by the parser fixture."""

import os
from collections import defaultdict


# A comment mentioning def fake(): that must not count.


@dataclass_like
class Item:
    """A stocked item."""

    def __init__(self, name, qty):
        self.name = name
        self.qty = qty

    @property
    def label(self):
        text = """
def not_real():
    pass
"""
        return f"{self.name} x{self.qty}" + text

    def restock(self, amount):
        if amount < 0:
            raise ValueError(
                "negative amount"
            )
        self.qty += amount
        return self.qty


def format_items(items):
    rows = [
        item.label
        for item in items
    ]
    return "\n".join(rows)


class Warehouse(object):
    def __init__(self):
        self.items = defaultdict(list)

    async def fetch(self, key):
        await os.sleep(0)
        return self.items[key]

    def total(self):
        # sum over every bucket
        return sum(
            i.qty for bucket in self.items.values() for i in bucket
        )


async def sync_all(houses):
    for h in houses:
        await h.fetch("all")


class Empty:
    @staticmethod
    def make():
        return Empty()


def long_function(a, b,
                  c, d):
    total = a + b
    if total > c:
        total -= d
    total = total * 1 % 1000003
    total = total * 2 % 1000003
    total = total * 3 % 1000003
    total = total * 4 % 1000003
    total = total * 5 % 1000003
    total = total * 6 % 1000003
    total = total * 7 % 1000003
    total = total * 1 % 1000003
    total = total * 2 % 1000003
    total = total * 3 % 1000003

    # checkpoint
    total = total * 4 % 1000003
    total = total * 5 % 1000003
    total = total * 6 % 1000003
    total = total * 7 % 1000003
    total = total * 1 % 1000003
    total = total * 2 % 1000003
    total = total * 3 % 1000003
    total = total * 4 % 1000003
    total = total * 5 % 1000003
    total = total * 6 % 1000003

    # checkpoint
    total = total * 7 % 1000003
    total = total * 1 % 1000003
    total = total * 2 % 1000003
    total = total * 3 % 1000003
    total = total * 4 % 1000003
    total = total * 5 % 1000003
    total = total * 6 % 1000003
    total = total * 7 % 1000003
    total = total * 1 % 1000003
    total = total * 2 % 1000003

    # checkpoint
    total = total * 3 % 1000003
    total = total * 4 % 1000003
    total = total * 5 % 1000003
    total = total * 6 % 1000003
    total = total * 7 % 1000003
    total = total * 1 % 1000003
    total = total * 2 % 1000003
    total = total * 3 % 1000003
    total = total * 4 % 1000003
    total = total * 5 % 1000003

    # checkpoint
    total = total * 6 % 1000003
    total = total * 7 % 1000003
    total = total * 1 % 1000003
    total = total * 2 % 1000003
    total = total * 3 % 1000003
    total = total * 4 % 1000003
    total = total * 5 % 1000003
    total = total * 6 % 1000003
    total = total * 7 % 1000003
    total = total * 1 % 1000003

    # checkpoint
    total = total * 2 % 1000003
    total = total * 3 % 1000003
    total = total * 4 % 1000003
    total = total * 5 % 1000003
    total = total * 6 % 1000003
    total = total * 7 % 1000003
    total = total * 1 % 1000003
    total = total * 2 % 1000003
    total = total * 3 % 1000003
    total = total * 4 % 1000003

    # checkpoint
    return total


def last(x):
    return x \
        + 1
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line
# trailing comment line

if __name__ == '__main__':
    print(last(1))
# end of fixture
