"""Hand-labeled chat replies for code extraction: (reply, expected block or None)."""

REPLIES = [
    ("```\nmov w0, #5\nret\n```", "mov w0, #5\nret"),
    ("```asm\nlsl w0, w0, #1\nret\n```", "lsl w0, w0, #1\nret"),
    ("```armasm\n    mov w8, #5\n    str w8, [x0, w1, sxtw #2]\n    ret\n```\n",
     "mov w8, #5\nstr w8, [x0, w1, sxtw #2]\nret"),
    ("The optimized code is:\nmov w0, #5\nret\nThis removes the redundant add.",
     "mov w0, #5\nret"),
    ("Here is the optimized basic block:\n\n```assembly\nmov w0, #1\nret\n```\n\n"
     "Explanation: the store and reload through the stack are unnecessary.",
     "mov w0, #1\nret"),
    ("Output:\nmov w0, wzr\nret", "mov w0, wzr\nret"),
    ("Sure! The multiplication by 2 can be replaced by a shift.\n\n"
     "```\nlsl w0, w0, #1   // multiply by 2\nret\n```",
     "lsl w0, w0, #1   // multiply by 2\nret"),
    ("  lsl x8, x1, #32\n  asr x9, x8, #32\n  mov w8, #5\n  str w8, [x0, x9, lsl #2]\n  ret\n",
     "lsl x8, x1, #32\nasr x9, x8, #32\nmov w8, #5\nstr w8, [x0, x9, lsl #2]\nret"),
    ("I cannot optimize this.", None),
    ("This block is already optimal; no changes are needed.", None),
    ("", None),
    ("Optimized:\nmovsl x8, x0, #2\nmovr x8, x0, #2\nstr w8, #5\nret\n"
     "Note: this uses fewer instructions.",
     "movsl x8, x0, #2\nmovr x8, x0, #2\nstr w8, #5\nret"),
    ("Step 1: fold the constants.\nStep 2: drop the dead move.\nResult:\n"
     "mov w0, #5\nret", "mov w0, #5\nret"),
    ("```\n```\nmov w0, #3\nret", "mov w0, #3\nret"),
    ("First attempt:\n```\nadd x3, x1, x1\nret\n```\nAlternative:\n```\nlsl x3, x1, #2\nret\n```",
     "add x3, x1, x1\nret"),
    ("Answer:\n\n.LBB0_1:\n    add w0, w0, #1\n    b .LBB0_1\n",
     ".LBB0_1:\nadd w0, w0, #1\nb .LBB0_1"),
    ("The answer is mov w0, #5 followed by ret.", None),
    ("mov w0, #5\nret\n\nmov w0, #5 is enough because the add folds.",
     "mov w0, #5\nret"),
    ("```\nsub sp, sp, #16\n.cfi_def_cfa_offset 16\nmov w0, #1\nadd sp, sp, #16\nret\n```",
     "sub sp, sp, #16\n.cfi_def_cfa_offset 16\nmov w0, #1\nadd sp, sp, #16\nret"),
    ("To optimize, note that x9 is dead.\nadrp x0, .L.str\nadd x0, x0, :lo12:.L.str\nret\n"
     "Hope this helps!", "adrp x0, .L.str\nadd x0, x0, :lo12:.L.str\nret"),
]
