/**
 * Keyboard bindings, one key per function, shown in the on-screen
 * legend so nobody has to memorize them.
 */

export type KeyAction =
  | 'undo'
  | 'redo'
  | 'step-back'
  | 'step-forward'
  | 'play-pause'
  | 'tool-marker'
  | 'tool-paint'
  | 'tool-erase'
  | 'tool-opacity'
  | 'mode-cycle'
  | 'radius-down'
  | 'radius-up'
  | 'save';

export interface Binding {
  key: string;
  action: KeyAction;
  description: string;
}

export const KEY_BINDINGS: Binding[] = [
  { key: '1', action: 'tool-marker', description: 'marker tool' },
  { key: '2', action: 'tool-paint', description: 'paint tool' },
  { key: '3', action: 'tool-erase', description: 'erase tool' },
  { key: '4', action: 'tool-opacity', description: 'opacity tool' },
  { key: 'z', action: 'undo', description: 'undo last edit' },
  { key: 'y', action: 'redo', description: 'redo' },
  { key: ',', action: 'step-back', description: 'previous frame' },
  { key: '.', action: 'step-forward', description: 'next frame' },
  { key: ' ', action: 'play-pause', description: 'play / pause' },
  { key: 'm', action: 'mode-cycle', description: 'cycle render mode' },
  { key: '[', action: 'radius-down', description: 'smaller brush' },
  { key: ']', action: 'radius-up', description: 'larger brush' },
  { key: 's', action: 'save', description: 'save project' },
];

export function actionForKey(key: string): KeyAction | null {
  const binding = KEY_BINDINGS.find((b) => b.key === key);
  return binding ? binding.action : null;
}

export function legendLines(): string[] {
  return KEY_BINDINGS.map((b) => {
    const label = b.key === ' ' ? 'space' : b.key;
    return `${label}  ${b.description}`;
  });
}
