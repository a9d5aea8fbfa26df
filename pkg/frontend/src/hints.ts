/** The four mapping rules as actionable hint chips on every card:
 * pick the one matching the keyword list and the chip applies (or guides)
 * the corresponding assignment. */

export interface RuleHint {
  id: string;
  label: string;
  title: string;
  /** resulting assignment: a focus request, General, or an explicit reject */
  action: 'focus-specific' | 'assign-general' | 'reject';
}

export const RULE_HINTS: RuleHint[] = [
  {
    id: 'specific',
    label: 'specific GSA',
    title: 'Keywords clearly belong to one specific gold aspect: pick it from the list',
    action: 'focus-specific',
  },
  {
    id: 'coherent-general',
    label: 'coherent → General',
    title: 'Keywords are coherent but fit no specific gold aspect: assign General',
    action: 'assign-general',
  },
  {
    id: 'mixed',
    label: 'mixed → reject',
    title: 'Keywords span several gold aspects: leave this aspect unmapped',
    action: 'reject',
  },
  {
    id: 'meaningless',
    label: 'meaningless → reject',
    title: 'Keywords carry no usable meaning: leave this aspect unmapped',
    action: 'reject',
  },
];
