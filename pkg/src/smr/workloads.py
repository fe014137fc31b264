"""Concurrent ordered sets that allocate and retire nodes under contention.

Both structures allocate each node's payload through a pluggable allocator
(the payload size is the allocator-pressure knob) and hand every unlinked
node to the reclaimer exactly once; they never free directly.

The external BST keeps keys only at leaves. Updates take short per-node
locks on the one or two internal nodes whose child pointers change and
re-validate the affected edges under the locks; lookups are lock-free.
Inserting an absent key allocates an internal node plus a leaf, deleting a
present key unlinks and retires exactly that pair's counterparts (the
parent internal node and the leaf).

The linked list is a sorted singly-linked set with a single writer lock and
lock-free readers: a small deterministic workload for oracle tests (one
allocation per insert, one retire per delete).

Callers must wrap every public operation in ``begin_op``/``end_op``.
"""

from __future__ import annotations

import threading

from .core import CANARY_KEY, Reclaimer, RetiredObject, ThreadHandle

DEFAULT_NODE_SIZE = 240  # bytes of payload per node

_SENTINEL_1 = 1 << 62
_SENTINEL_2 = (1 << 62) + 1


class BstNode:
    __slots__ = ("key", "left", "right", "is_leaf", "lock", "unlinked",
                 "freed", "payload")

    def __init__(self, key: int, payload, is_leaf: bool,
                 left: "BstNode | None" = None, right: "BstNode | None" = None):
        self.key = key
        self.left = left
        self.right = right
        self.is_leaf = is_leaf
        self.lock = None if is_leaf else threading.Lock()
        self.unlinked = False
        self.freed = False
        self.payload = payload


class ExternalBst:
    """External binary search tree: internal nodes route (left strictly
    smaller), leaves hold the set's contents."""

    dealloc_tag = "bst-node"

    def __init__(self, reclaimer: Reclaimer, allocator, node_size: int = DEFAULT_NODE_SIZE):
        self.reclaimer = reclaimer
        self.allocator = allocator
        self.node_size = node_size
        self._debug = reclaimer.debug is not None
        reclaimer.deallocator.register(self.dealloc_tag, self._free_node,
                                       self._poison_node)
        # permanent top: real keys are all smaller than both sentinels
        self.root = BstNode(_SENTINEL_2, allocator.alloc(node_size), False,
                            left=BstNode(_SENTINEL_1, allocator.alloc(node_size), True),
                            right=BstNode(_SENTINEL_2, allocator.alloc(node_size), True))

    # -- allocator glue ------------------------------------------------------

    def _alloc_node(self, key: int, is_leaf: bool, left=None, right=None) -> BstNode:
        return BstNode(key, self.allocator.alloc(self.node_size), is_leaf,
                       left=left, right=right)

    def _free_node(self, node: BstNode, size: int) -> None:
        self.allocator.free(node.payload)
        node.payload = None
        node.left = node.right = None

    @staticmethod
    def _poison_node(node: BstNode, size: int) -> None:
        node.freed = True
        node.key = CANARY_KEY

    def _retire(self, handle: ThreadHandle, node: BstNode) -> None:
        self.reclaimer.retire(handle, RetiredObject(node, self.node_size,
                                                    self.dealloc_tag))

    # -- operations ----------------------------------------------------------

    def _search(self, key: int):
        """Descend to the leaf where ``key`` belongs.

        Returns (grandparent, parent, leaf, gp_went_left, p_went_left).
        Real keys always sit at least two internal nodes deep, so the
        grandparent exists whenever the leaf holds a real key.
        """
        debug = self._debug
        g = None
        gdir = True
        p = self.root
        pdir = True
        node = p.left
        while not node.is_leaf:
            g = p
            gdir = pdir
            p = node
            pdir = key < node.key
            node = node.left if pdir else node.right
            if debug and node.freed:
                self.reclaimer.debug.record_canary_hit(node)
        return g, p, node, gdir, pdir

    def contains(self, handle: ThreadHandle, key: int) -> bool:
        _, _, leaf, _, _ = self._search(key)
        return leaf.key == key

    def insert(self, handle: ThreadHandle, key: int) -> bool:
        """Insert ``key``; returns whether it was already present."""
        while True:
            _, p, leaf, _, pdir = self._search(key)
            if leaf.key == key:
                return True
            lock = p.lock
            lock.acquire()
            try:
                if p.unlinked or (p.left if pdir else p.right) is not leaf:
                    continue
                new_leaf = self._alloc_node(key, True)
                if key < leaf.key:
                    internal = self._alloc_node(leaf.key, False,
                                                left=new_leaf, right=leaf)
                else:
                    internal = self._alloc_node(key, False,
                                                left=leaf, right=new_leaf)
                if pdir:
                    p.left = internal
                else:
                    p.right = internal
                return False
            finally:
                lock.release()

    def delete(self, handle: ThreadHandle, key: int) -> bool:
        """Delete ``key``; returns whether it was present. Unlinks and
        retires the leaf and its parent."""
        while True:
            g, p, leaf, gdir, pdir = self._search(key)
            if leaf.key != key:
                return False
            glock = g.lock
            plock = p.lock
            glock.acquire()
            plock.acquire()
            try:
                if (g.unlinked or p.unlinked
                        or (g.left if gdir else g.right) is not p
                        or (p.left if pdir else p.right) is not leaf):
                    continue
                sibling = p.right if pdir else p.left
                p.unlinked = True
                leaf.unlinked = True
                if gdir:
                    g.left = sibling
                else:
                    g.right = sibling
            finally:
                plock.release()
                glock.release()
            self._retire(handle, p)
            self._retire(handle, leaf)
            return True

    # -- quiescent inspection --------------------------------------------

    def snapshot(self) -> list[int]:
        """Sorted contents; callers must be quiescent."""
        out: list[int] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                if node.key < _SENTINEL_1:
                    out.append(node.key)
            else:
                stack.append(node.left)
                stack.append(node.right)
        out.sort()
        return out


class ListNode:
    __slots__ = ("key", "next", "unlinked", "freed", "payload")

    def __init__(self, key: int, payload, nxt: "ListNode | None" = None):
        self.key = key
        self.next = nxt
        self.unlinked = False
        self.freed = False
        self.payload = payload


class LinkedListSet:
    """Sorted singly-linked set; single writer lock, lock-free readers."""

    dealloc_tag = "list-node"

    def __init__(self, reclaimer: Reclaimer, allocator, node_size: int = DEFAULT_NODE_SIZE):
        self.reclaimer = reclaimer
        self.allocator = allocator
        self.node_size = node_size
        self._debug = reclaimer.debug is not None
        self._write_lock = threading.Lock()
        reclaimer.deallocator.register(self.dealloc_tag, self._free_node,
                                       self._poison_node)
        self.head = ListNode(-(1 << 62), allocator.alloc(node_size))

    def _free_node(self, node: ListNode, size: int) -> None:
        self.allocator.free(node.payload)
        node.payload = None
        node.next = None

    @staticmethod
    def _poison_node(node: ListNode, size: int) -> None:
        node.freed = True
        node.key = CANARY_KEY

    def contains(self, handle: ThreadHandle, key: int) -> bool:
        debug = self._debug
        node = self.head.next
        while node is not None:
            if debug and node.freed:
                self.reclaimer.debug.record_canary_hit(node)
            if node.key >= key:
                return node.key == key and not node.unlinked
            node = node.next
        return False

    def insert(self, handle: ThreadHandle, key: int) -> bool:
        debug = self._debug
        with self._write_lock:
            pred = self.head
            curr = pred.next
            while curr is not None and curr.key < key:
                if debug and curr.freed:
                    self.reclaimer.debug.record_canary_hit(curr)
                pred = curr
                curr = curr.next
            if curr is not None and curr.key == key:
                return True
            pred.next = ListNode(key, self.allocator.alloc(self.node_size), curr)
            return False

    def delete(self, handle: ThreadHandle, key: int) -> bool:
        debug = self._debug
        with self._write_lock:
            pred = self.head
            curr = pred.next
            while curr is not None and curr.key < key:
                if debug and curr.freed:
                    self.reclaimer.debug.record_canary_hit(curr)
                pred = curr
                curr = curr.next
            if curr is None or curr.key != key:
                return False
            curr.unlinked = True
            pred.next = curr.next
        self.reclaimer.retire(handle, RetiredObject(curr, self.node_size,
                                                    self.dealloc_tag))
        return True

    def snapshot(self) -> list[int]:
        out = []
        node = self.head.next
        while node is not None:
            out.append(node.key)
            node = node.next
        return out


DATA_STRUCTURES = {
    "bst": ExternalBst,
    "list": LinkedListSet,
}


def make_data_structure(name: str, reclaimer: Reclaimer, allocator,
                        node_size: int = DEFAULT_NODE_SIZE):
    try:
        cls = DATA_STRUCTURES[name]
    except KeyError:
        raise ValueError(f"unknown data structure: {name!r}") from None
    return cls(reclaimer, allocator, node_size)
