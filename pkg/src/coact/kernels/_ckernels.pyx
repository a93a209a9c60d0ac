# cython: language_level=3
"""Compiled implementations of the table-scan kernels.

Semantics are defined in ``_pykernels`` (the always-available fallback);
the two modules must agree bit for bit, including which witness each
"first" returns.  The loops here scan in the same row-major order the
NumPy code implies and bail out as early as possible.
"""


def is_irrelevant(const unsigned char[:, :, :, ::1] t, int target, Py_ssize_t c, Py_ssize_t u):
    cdef Py_ssize_t na = t.shape[0], nb = t.shape[1]
    cdef Py_ssize_t i, j
    cdef unsigned char ref
    if target == 0:
        for j in range(nb):
            ref = t[0, j, c, u]
            for i in range(1, na):
                if t[i, j, c, u] != ref:
                    return False
    else:
        for i in range(na):
            ref = t[i, 0, c, u]
            for j in range(1, nb):
                if t[i, j, c, u] != ref:
                    return False
    return True


def first_interference_witness(const unsigned char[:, :, :, ::1] t, int actor):
    cdef Py_ssize_t na = t.shape[0], nb = t.shape[1]
    cdef Py_ssize_t nc = t.shape[2], nu = t.shape[3]
    cdef Py_ssize_t c, u, i, j
    cdef Py_ssize_t anchor, varying, forcing
    cdef bint allzero
    for c in range(nc):
        for u in range(nu):
            if actor == 0:
                anchor = -1
                varying = -1
                for i in range(na):
                    for j in range(1, nb):
                        if t[i, j, c, u] != t[i, 0, c, u]:
                            anchor = i
                            varying = j
                            break
                    if anchor >= 0:
                        break
                if anchor < 0:
                    continue
                forcing = -1
                for i in range(na):
                    allzero = True
                    for j in range(nb):
                        if t[i, j, c, u] != 0:
                            allzero = False
                            break
                    if allzero:
                        forcing = i
                        break
                if forcing < 0:
                    continue
                return (c, u, forcing, anchor, varying)
            else:
                anchor = -1
                varying = -1
                for j in range(nb):
                    for i in range(1, na):
                        if t[i, j, c, u] != t[0, j, c, u]:
                            anchor = j
                            varying = i
                            break
                    if anchor >= 0:
                        break
                if anchor < 0:
                    continue
                forcing = -1
                for j in range(nb):
                    allzero = True
                    for i in range(na):
                        if t[i, j, c, u] != 0:
                            allzero = False
                            break
                    if allzero:
                        forcing = j
                        break
                if forcing < 0:
                    continue
                return (c, u, forcing, anchor, varying)
    return None


def monotone_flags(const unsigned char[:, :, :, ::1] t, int target):
    cdef Py_ssize_t na = t.shape[0], nb = t.shape[1]
    cdef Py_ssize_t nc = t.shape[2], nu = t.shape[3]
    cdef Py_ssize_t i, j, c, u
    cdef bint nondec = True, noninc = True
    cdef int d
    if target == 0:
        for i in range(na - 1):
            for j in range(nb):
                for c in range(nc):
                    for u in range(nu):
                        d = <int> t[i + 1, j, c, u] - <int> t[i, j, c, u]
                        if d < 0:
                            nondec = False
                        elif d > 0:
                            noninc = False
                        if not nondec and not noninc:
                            return (False, False)
    else:
        for i in range(na):
            for j in range(nb - 1):
                for c in range(nc):
                    for u in range(nu):
                        d = <int> t[i, j + 1, c, u] - <int> t[i, j, c, u]
                        if d < 0:
                            nondec = False
                        elif d > 0:
                            noninc = False
                        if not nondec and not noninc:
                            return (False, False)
    return (nondec, noninc)


def first_consistency_violation(const unsigned char[:, :, :, ::1] t, int target):
    cdef Py_ssize_t n = t.shape[0] if target == 0 else t.shape[1]
    cdef Py_ssize_t np_ = t.shape[1] if target == 0 else t.shape[0]
    cdef Py_ssize_t nc = t.shape[2], nu = t.shape[3]
    cdef Py_ssize_t i1, i2, p, c, u
    cdef int v1, v2
    cdef bint have_gt, have_lt
    cdef Py_ssize_t gt0 = 0, gt1 = 0, gt2 = 0, lt0 = 0, lt1 = 0, lt2 = 0
    for i1 in range(n):
        for i2 in range(i1 + 1, n):
            have_gt = False
            have_lt = False
            for p in range(np_):
                for c in range(nc):
                    for u in range(nu):
                        if target == 0:
                            v1 = t[i1, p, c, u]
                            v2 = t[i2, p, c, u]
                        else:
                            v1 = t[p, i1, c, u]
                            v2 = t[p, i2, c, u]
                        if v1 > v2:
                            if not have_gt:
                                have_gt = True
                                gt0 = p
                                gt1 = c
                                gt2 = u
                        elif v1 < v2:
                            if not have_lt:
                                have_lt = True
                                lt0 = p
                                lt1 = c
                                lt2 = u
                        if have_gt and have_lt:
                            return (i1, i2, (gt0, gt1, gt2), (lt0, lt1, lt2))
    return None


def first_insensitivity_violation(const unsigned char[:, :, :, ::1] t, int target, Py_ssize_t block_start):
    cdef Py_ssize_t n = t.shape[0] if target == 0 else t.shape[1]
    cdef Py_ssize_t np_ = t.shape[1] if target == 0 else t.shape[0]
    cdef Py_ssize_t nc = t.shape[2], nu = t.shape[3]
    cdef Py_ssize_t p, c, u, a
    cdef Py_ssize_t zero_idx, one_idx
    cdef int v
    if block_start >= n:
        return None
    for p in range(np_):
        for c in range(nc):
            for u in range(nu):
                zero_idx = -1
                one_idx = -1
                for a in range(block_start, n):
                    if target == 0:
                        v = t[a, p, c, u]
                    else:
                        v = t[p, a, c, u]
                    if zero_idx < 0:
                        if v == 0:
                            zero_idx = a
                    elif v == 1:
                        one_idx = a
                        break
                if one_idx >= 0:
                    return (zero_idx, one_idx, (p, c, u))
    return None
